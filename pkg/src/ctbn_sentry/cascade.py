"""Threshold-based cascade detection and the naive sentry baseline.

An event is *fast* when it follows its predecessor within the fast
threshold.  A cascade is a maximal run of consecutive fast events of at
least the minimum length; the state occupied immediately before the run's
first event launched the cascade and is credited as its sentry state.  The
naive baseline counts, per state, how many cascades it launched (Naive
Count) and the fraction of its visits that did so (Naive Score).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .graphs import condensation, induced_subgraph
from .model import (
    CtbnModel,
    active_alarm_count,
    build_state_space_graph,
    state_index,
)
from .sentry import ednt_exact, ednt_mc, rank_sentry_states, rednt
from .simulate import SimulationConfig, Trajectory, sample_ensemble


@dataclass(frozen=True)
class NaiveParams:
    """Fast-gap threshold (time units) and minimum cascade length (events)."""

    fast_threshold: float
    min_cascade_length: int = 2

    def __post_init__(self):
        if not self.fast_threshold > 0:
            raise ValueError(f"fast_threshold must be positive, got {self.fast_threshold}")
        if self.min_cascade_length < 2:
            raise ValueError(
                f"min_cascade_length must be >= 2, got {self.min_cascade_length}")


@dataclass(frozen=True)
class CascadeWindow:
    """Event-index span [first, last] of one cascade and its launching state."""

    first_event_index: int
    last_event_index: int
    sentry_state: tuple[int, ...]

    @property
    def length(self) -> int:
        return self.last_event_index - self.first_event_index + 1


def _fast_runs(times: np.ndarray, params: NaiveParams) -> list[tuple[int, int]]:
    """Maximal runs of consecutive fast events meeting the length minimum.

    The first event of a trajectory has no predecessor and is never fast.
    """
    n = times.size
    if n < 2:
        return []
    fast = np.empty(n, dtype=bool)
    fast[0] = False
    np.less(np.diff(times), params.fast_threshold, out=fast[1:])
    if not fast.any():
        return []
    prev = np.concatenate(([False], fast[:-1]))
    nxt = np.concatenate((fast[1:], [False]))
    starts = np.flatnonzero(fast & ~prev)
    ends = np.flatnonzero(fast & ~nxt)
    return [(int(a), int(b)) for a, b in zip(starts, ends)
            if b - a + 1 >= params.min_cascade_length]


def identify_cascades(trajectory: Trajectory, params: NaiveParams) -> list[CascadeWindow]:
    """All cascades of a trajectory, in time order (windows are disjoint)."""
    runs = _fast_runs(trajectory.times, params)
    if not runs:
        return []
    procs = trajectory.processes.tolist()
    states = trajectory.new_states.tolist()
    values = list(trajectory.initial_state)
    out = []
    pos = 0
    for a, b in runs:
        while pos < a:  # replay up to (not including) the run's first event
            values[procs[pos]] = states[pos]
            pos += 1
        out.append(CascadeWindow(a, b, tuple(values)))
    return out


@dataclass
class NaiveScores:
    """Cascade-start counts and visit counts accumulated over trajectories."""

    counts: dict[tuple, int] = field(default_factory=dict)
    visits: dict[tuple, int] = field(default_factory=dict)
    total_cascades: int = 0

    def count(self, state: Sequence[int]) -> int:
        return self.counts.get(tuple(state), 0)

    def score(self, state: Sequence[int]) -> float:
        """Fraction of visits to the state that launched a cascade (0 if never seen)."""
        v = self.visits.get(tuple(state), 0)
        if not v:
            return 0.0
        return self.counts.get(tuple(state), 0) / v


def _accumulate(trajectory: Trajectory, params: NaiveParams, acc: NaiveScores) -> None:
    values = list(trajectory.initial_state)
    key = tuple(values)
    visits = acc.visits
    counts = acc.counts
    visits[key] = visits.get(key, 0) + 1  # the initial state counts as an entry
    runs = _fast_runs(trajectory.times, params)
    starts = [a for a, _ in runs]
    acc.total_cascades += len(starts)
    procs = trajectory.processes.tolist()
    states = trajectory.new_states.tolist()
    w = 0
    nw = len(starts)
    for i in range(len(procs)):
        if w < nw and i == starts[w]:
            key = tuple(values)
            counts[key] = counts.get(key, 0) + 1
            w += 1
        values[procs[i]] = states[i]
        key = tuple(values)
        visits[key] = visits.get(key, 0) + 1


def naive_scores(trajectories: Iterable[Trajectory], params: NaiveParams) -> NaiveScores:
    """Aggregate cascade starts and visits over a trajectory collection."""
    acc = NaiveScores()
    for traj in trajectories:
        _accumulate(traj, params, acc)
    return acc


def default_fast_threshold(trajectories: Iterable[Trajectory]) -> float:
    """Median inter-event gap, pooled across trajectories and event types."""
    gaps = [np.diff(t.times) for t in trajectories if t.event_count >= 2]
    if not gaps:
        raise ValueError("need at least two events in some trajectory to pool gaps")
    return float(np.median(np.concatenate(gaps)))


def suggested_min_cascade_length(graph, slow_processes: Iterable[str]) -> int:
    """Heuristic minimum cascade length: the longest chain of fast followers.

    A freshly triggered cascade is expected to ripple down the longest
    directed path of fast (non-slow) processes, so that path length is a
    natural lower bound on interesting cascade sizes.  Cycles among fast
    processes count with their full size.  Never below 2.
    """
    slow = set(slow_processes)
    fast_nodes = [n for n in graph.nodes if n not in slow]
    if not fast_nodes:
        return 2
    cond = condensation(induced_subgraph(graph, fast_nodes))
    bg = cond.graph
    order: list[str] = []
    seen: set[str] = set()

    def visit(node):  # blocks form a DAG, so plain DFS post-order works
        seen.add(node)
        for child in sorted(bg.children_of(node)):
            if child not in seen:
                visit(child)
        order.append(node)

    for node in bg.nodes:
        if node not in seen:
            visit(node)
    longest: dict[str, int] = {}
    for node in order:  # children before parents
        below = max((longest[c] for c in bg.children_of(node)), default=0)
        longest[node] = len(cond.blocks[node]) + below
    return max(2, max(longest.values()))


def jaccard_at_k(ranking_a: Sequence, ranking_b: Sequence, k: int) -> float:
    """Jaccard similarity of the two top-k prefixes."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(ranking_a) < k or len(ranking_b) < k:
        raise ValueError(f"rankings must have at least k={k} entries")
    top_a = set(ranking_a[:k])
    top_b = set(ranking_b[:k])
    return len(top_a & top_b) / len(top_a | top_b)


@dataclass(frozen=True)
class ComparisonResult:
    """Jaccard@k between the REDNT ranking and the naive-score ranking."""

    jaccard: tuple[tuple[int, float], ...]
    rednt_ranking: tuple[tuple[int, ...], ...]
    naive_ranking: tuple[tuple[int, ...], ...]
    fast_threshold: float
    max_active: int
    scores: NaiveScores


def compare_rednt_vs_naive(
    model: CtbnModel,
    config: SimulationConfig,
    params: NaiveParams | None,
    k_range: Iterable[int] | None = None,
    alpha: float = 0.1,
    min_cascade_length: int = 2,
    exact_cap: int = 4096,
    trajectories: Sequence[Trajectory] | None = None,
) -> ComparisonResult:
    """Rank sentry candidates by REDNT and by the naive score, then compare.

    Both rankings are restricted to states whose active-alarm count is at
    most the size of the model's largest parent set.  ``params=None``
    selects the fast threshold automatically as the pooled median gap of the
    sampled ensemble; ``k_range=None`` evaluates every k up to the full
    ranking length.  The naive list orders by score descending with count
    and then state index as tiebreaks.  A pre-sampled ensemble can be passed
    to avoid re-simulation; by default one is drawn from `config`.
    """
    max_active = max((len(p.parents) for p in model.processes), default=0)
    gs = build_state_space_graph(model)
    filtered = _low_activity_states(model, max_active)
    filtered_idx = [state_index(s, model) for s in filtered]

    if model.state_count <= exact_cap:
        ranking = rednt(ednt_exact(model, alpha), gs)
    else:
        wanted = set(filtered_idx)
        for idx in filtered_idx:
            wanted.update(gs.neighbors(idx))
        table = ednt_mc(model, alpha, config, states=sorted(wanted))
        ranking = rednt(table, gs)
    rednt_list = rank_sentry_states(ranking, max_active)

    if trajectories is None:
        trajectories = sample_ensemble(model, None, config)
    if params is None:
        params = NaiveParams(default_fast_threshold(trajectories), min_cascade_length)
    scores = naive_scores(trajectories, params)
    naive_list = sorted(
        filtered,
        key=lambda s: (-scores.score(s), -scores.count(s), state_index(s, model)),
    )

    if k_range is None:
        k_range = range(1, len(filtered) + 1)
    jac = tuple((k, jaccard_at_k(rednt_list, naive_list, k)) for k in k_range)
    return ComparisonResult(
        jaccard=jac,
        rednt_ranking=tuple(rednt_list),
        naive_ranking=tuple(naive_list),
        fast_threshold=params.fast_threshold,
        max_active=max_active,
        scores=scores,
    )


def _low_activity_states(model: CtbnModel, max_active: int) -> list[tuple[int, ...]]:
    if any(c != 2 for c in model.cardinalities):
        raise ValueError("active-alarm filtering requires binary processes")
    n = model.process_count
    out = []
    for k in range(max_active + 1):
        for on in combinations(range(n), k):
            state = [0] * n
            for j in on:
                state[j] = 1
            out.append(tuple(state))
    return sorted(out, key=lambda s: state_index(s, model))


# -- reports -------------------------------------------------------------------


def write_cascade_report(path, trajectories: Iterable[Trajectory],
                         params: NaiveParams) -> None:
    """CSV of every cascade window: trajectory, time span, length, sentry state."""
    fmt = "{:.17g}".format
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trajectory_id", "start_time", "end_time", "length",
                    "sentry_state_bits"])
        for tid, traj in enumerate(trajectories):
            for win in identify_cascades(traj, params):
                bits = "".join(str(v) for v in win.sentry_state)
                w.writerow([
                    tid,
                    fmt(float(traj.times[win.first_event_index])),
                    fmt(float(traj.times[win.last_event_index])),
                    win.length,
                    bits,
                ])


def write_naive_scores_report(path, scores: NaiveScores) -> None:
    """CSV of per-state naive counts and scores, best score first."""
    fmt = "{:.17g}".format
    states = sorted(
        set(scores.visits) | set(scores.counts),
        key=lambda s: (-scores.score(s), -scores.count(s), s),
    )
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["state_bits", "naive_count", "naive_score", "visits",
                    "active_alarms"])
        for state in states:
            bits = "".join(str(v) for v in state)
            w.writerow([bits, scores.count(state), fmt(scores.score(state)),
                        scores.visits.get(state, 0), active_alarm_count(state)])


def write_comparison_report(path, result: ComparisonResult) -> None:
    fmt = "{:.17g}".format
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "jaccard"])
        for k, j in result.jaccard:
            w.writerow([k, fmt(j)])
