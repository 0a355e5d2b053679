"""Discounted transition-count analysis and sentry-state ranking.

The central quantity is the expected discounted number of transitions
(EDNT) out of each joint state: every future transition at time t
contributes e^(-alpha * t).  On small state spaces the exact value solves a
linear system over the flattened chain; in general it is estimated by Monte
Carlo over sampled trajectories.  The relative EDNT (REDNT) of a state is
the largest ratio of its EDNT to that of any neighbor in the state-space
graph (the state itself included, which floors the ratio at 1); states with
high REDNT and few active alarms are the sentry candidates.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .model import (
    CtbnModel,
    DEFAULT_STATE_CAP,
    StateSpaceGraph,
    active_alarm_count,
    amalgamate,
    require_valid,
    state_index,
)
from .simulate import SimulationConfig, _compile, _run_events, derive_seed

Z_95 = 1.959963984540054  # two-sided 95% normal quantile


@dataclass(frozen=True)
class RewardSpec:
    """Reward structure: lump sums on transitions, a rate while occupying
    states, and an exponential discount per unit time.

    The default counts transitions: lump_sum == 1 for every transition and
    no instantaneous reward.
    """

    discount: float
    lump_sum: Callable[[tuple, tuple], float] | None = None
    instantaneous: Callable[[tuple], float] | None = None

    def __post_init__(self):
        if not self.discount > 0:
            raise ValueError(f"discount must be positive, got {self.discount}")

    @property
    def counts_transitions(self) -> bool:
        return self.lump_sum is None and self.instantaneous is None


@dataclass(frozen=True)
class EdntTable:
    """Per-state Monte Carlo estimates with standard errors.

    May cover a subset of the joint space (``state_indices`` says which).
    """

    state_indices: np.ndarray
    estimates: np.ndarray
    stderrs: np.ndarray
    trajectory_counts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "state_indices", np.asarray(self.state_indices, dtype=int))
        object.__setattr__(self, "estimates", np.asarray(self.estimates, dtype=float))
        object.__setattr__(self, "stderrs", np.asarray(self.stderrs, dtype=float))
        object.__setattr__(self, "trajectory_counts",
                           np.asarray(self.trajectory_counts, dtype=int))

    def __len__(self) -> int:
        return len(self.state_indices)

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.state_indices.tolist(), self.estimates.tolist()))

    def stderr_dict(self) -> dict[int, float]:
        return dict(zip(self.state_indices.tolist(), self.stderrs.tolist()))


@dataclass(frozen=True)
class RedntRanking:
    """REDNT values over (a subset of) joint states, sorted best-first.

    ``flags`` marks degenerate entries: 'zero-ednt' when the state itself
    has EDNT 0 (value pinned to 1), 'infinite' when a neighbor has EDNT 0
    while the state does not.
    """

    graph: StateSpaceGraph
    state_indices: np.ndarray
    values: np.ndarray
    flags: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "state_indices", np.asarray(self.state_indices, dtype=int))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    @property
    def order(self) -> list[int]:
        """State indices sorted by REDNT descending, ties by index ascending."""
        pairs = sorted(zip(self.state_indices.tolist(), self.values.tolist()),
                       key=lambda sv: (-sv[1], sv[0]))
        return [s for s, _ in pairs]

    def value_of(self, index: int) -> float:
        pos = np.flatnonzero(self.state_indices == index)
        if not pos.size:
            raise KeyError(index)
        return float(self.values[pos[0]])


# -- Monte Carlo discounted rewards ---------------------------------------------


def _transition_count_score(tables, initial: list[int], t_end: float, alpha: float,
                            rng) -> float:
    """Discounted transition count of one sampled trajectory (lump sum 1)."""
    events = _run_events(tables, initial, t_end, rng)
    exp = math.exp
    total = 0.0
    for t, _, _ in events:
        total += exp(-alpha * t)
    return total


def _general_score(tables, values: list[int], t_end: float, reward: RewardSpec,
                   rng) -> float:
    alpha = reward.discount
    lump = reward.lump_sum or (lambda x, y: 1.0)
    inst = reward.instantaneous
    start = tuple(values)
    events = _run_events(tables, values, t_end, rng)
    exp = math.exp
    total = 0.0
    prev_state = list(start)
    prev_t = 0.0
    prev_weight = 1.0  # e^(-alpha * 0)
    for t, j, s in events:
        weight = exp(-alpha * t)
        if inst is not None:
            total += inst(tuple(prev_state)) / alpha * (prev_weight - weight)
        before = tuple(prev_state)
        prev_state[j] = s
        total += weight * lump(before, tuple(prev_state))
        prev_t, prev_weight = t, weight
    if inst is not None:  # close the final segment at t_end
        total += inst(tuple(prev_state)) / alpha * (prev_weight - exp(-alpha * t_end))
    return total


def discounted_reward_mc(model: CtbnModel, initial: Sequence[int], reward: RewardSpec,
                         config: SimulationConfig) -> tuple[float, float]:
    """Sample mean and standard error of the discounted reward from one state.

    Each trajectory scores sum_i e^(-alpha t_i) * lump(x_before, x_after)
    plus the discounted time integral of the instantaneous reward, truncated
    at the horizon.
    """
    require_valid(model)
    tables = _compile(model)
    alpha = reward.discount
    scores = np.empty(config.trajectory_count)
    for k in range(config.trajectory_count):
        rng = random.Random(derive_seed(config.master_seed, k))
        values = [int(v) for v in initial]
        if reward.counts_transitions:
            scores[k] = _transition_count_score(tables, values, config.t_end, alpha, rng)
        else:
            scores[k] = _general_score(tables, values, config.t_end, reward, rng)
    return float(scores.mean()), _stderr(scores)


def _stderr(scores: np.ndarray) -> float:
    if scores.size < 2:
        return 0.0
    return float(scores.std(ddof=1) / math.sqrt(scores.size))


def ednt_mc(model: CtbnModel, alpha: float, config: SimulationConfig,
            states: Iterable[Sequence[int] | int] | None = None,
            max_states: int = DEFAULT_STATE_CAP) -> EdntTable:
    """Monte Carlo EDNT per requested state (default: every joint state).

    Trajectory k for state x is seeded with derive_seed(master, index(x), k),
    so the table is independent of the order states are requested in.
    """
    require_valid(model)
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if states is None:
        if model.state_count > max_states:
            raise ValueError(
                "model too large to enumerate all states; pass an explicit subset")
        indices = list(range(model.state_count))
    else:
        indices = sorted({
            s if isinstance(s, int) else state_index(s, model) for s in states
        })
    tables = _compile(model)
    n = config.trajectory_count
    cards = model.cardinalities

    estimates = np.empty(len(indices))
    stderrs = np.empty(len(indices))
    for row, idx in enumerate(indices):
        values0 = []
        rem = idx
        for m in _multipliers(cards):
            v, rem = divmod(rem, m)
            values0.append(v)
        scores = np.empty(n)
        for k in range(n):
            rng = random.Random(derive_seed(config.master_seed, idx, k))
            scores[k] = _transition_count_score(tables, list(values0), config.t_end,
                                                alpha, rng)
        estimates[row] = scores.mean()
        stderrs[row] = _stderr(scores)
    return EdntTable(np.array(indices), estimates, stderrs, np.full(len(indices), n))


def _multipliers(cards: Sequence[int]) -> list[int]:
    mults = [1] * len(cards)
    for j in range(len(cards) - 2, -1, -1):
        mults[j] = mults[j + 1] * cards[j + 1]
    return mults


# -- exact values ----------------------------------------------------------------


def ednt_exact(model: CtbnModel, alpha: float,
               max_states: int = DEFAULT_STATE_CAP) -> np.ndarray:
    """Exact EDNT for every joint state by first-step analysis.

    With Q the flattened intensity matrix and q the exit-rate vector, the
    values solve (alpha I - Q) V = q; this is the infinite-horizon limit of
    the Monte Carlo estimator.  States with exit rate 0 get V = 0.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    Q = amalgamate(model, max_states=max_states)
    q_exit = -np.diag(Q)
    A = alpha * np.eye(Q.shape[0]) - Q
    return np.linalg.solve(A, q_exit)


# -- REDNT and ranking -------------------------------------------------------------


def rednt(ednt: EdntTable | np.ndarray | Sequence[float],
          gs: StateSpaceGraph) -> RedntRanking:
    """Relative EDNT: max ratio of a state's EDNT to its neighborhood's.

    The neighborhood includes the state itself, so values never drop below
    1.  A zero-EDNT neighbor of a positive-EDNT state yields +inf (flagged
    'infinite'); a zero-EDNT state itself is pinned to 1 (flagged
    'zero-ednt').  With a partial table, only states whose entire
    neighborhood is covered are ranked.
    """
    if isinstance(ednt, EdntTable):
        values = ednt.as_dict()
    else:
        arr = np.asarray(ednt, dtype=float)
        if arr.shape != (gs.node_count,):
            raise ValueError(f"expected {gs.node_count} EDNT values, got {arr.shape}")
        values = dict(enumerate(arr.tolist()))

    out_idx: list[int] = []
    out_val: list[float] = []
    flags: dict[int, str] = {}
    for idx in sorted(values):
        own = values[idx]
        neighborhood = gs.neighbors(idx)
        if any(nb not in values for nb in neighborhood):
            continue  # partial table: neighborhood not fully estimated
        if own < 0:
            raise ValueError(f"negative EDNT at state {idx}")
        if own == 0.0:
            best = 1.0
            flags[idx] = "zero-ednt"
        else:
            best = 1.0  # self-inclusion
            for nb in neighborhood:
                other = values[nb]
                if other == 0.0:
                    best = math.inf
                    flags[idx] = "infinite"
                    break
                ratio = own / other
                if ratio > best:
                    best = ratio
        out_idx.append(idx)
        out_val.append(best)
    return RedntRanking(gs, np.array(out_idx), np.array(out_val), flags)


def rank_sentry_states(ranking: RedntRanking, max_active: int) -> list[tuple[int, ...]]:
    """States with at most `max_active` active alarms, best REDNT first.

    Requires binary processes (the active-alarm count is the number of
    components in state 1).  Ties break toward the smaller state index.
    """
    gs = ranking.graph
    if any(c != 2 for c in gs.cardinalities):
        raise ValueError("active-alarm filtering requires binary processes")
    out = []
    for idx in ranking.order:
        state = gs.state_of(idx)
        if active_alarm_count(state) <= max_active:
            out.append(state)
    return out


# -- sequential stopping rule --------------------------------------------------------


@dataclass(frozen=True)
class StoppingResult:
    estimate: float
    stderr: float
    trajectories_used: int
    stopped_by: str  # 'halfwidth' or 'cap'


def stopping_rule_ednt(model: CtbnModel, initial: Sequence[int], alpha: float,
                       t_end: float, relative_halfwidth: float,
                       batch: int = 200, cap: int = 100_000,
                       seed: int = 0) -> StoppingResult:
    """Sample EDNT in batches until the 95% confidence half-width is small.

    Stops once half-width / |estimate| < relative_halfwidth (absolute
    half-width when the estimate is 0), or when `cap` trajectories have been
    spent, whichever comes first.
    """
    if not relative_halfwidth > 0:
        raise ValueError("relative_halfwidth must be positive")
    if batch < 1 or cap < 1:
        raise ValueError("batch and cap must be >= 1")
    require_valid(model)
    tables = _compile(model)
    scores: list[float] = []
    while True:
        take = min(batch, cap - len(scores))
        for k in range(take):
            rng = random.Random(derive_seed(seed, len(scores)))
            scores.append(_transition_count_score(tables, [int(v) for v in initial],
                                                  t_end, alpha, rng))
        arr = np.asarray(scores)
        est = float(arr.mean())
        se = _stderr(arr)
        half = Z_95 * se
        criterion = half / abs(est) if est != 0.0 else half
        if criterion < relative_halfwidth:
            return StoppingResult(est, se, len(scores), "halfwidth")
        if len(scores) >= cap:
            return StoppingResult(est, se, len(scores), "cap")


# -- report ------------------------------------------------------------------------


def write_sentry_report(path, model: CtbnModel, ednt: EdntTable | np.ndarray,
                        ranking: RedntRanking) -> None:
    """CSV report sorted by REDNT descending.

    Columns: state_bits, ednt, ednt_stderr, rednt, active_alarms; state_bits
    renders local states in process order.
    """
    if isinstance(ednt, EdntTable):
        values = ednt.as_dict()
        errors = ednt.stderr_dict()
    else:
        arr = np.asarray(ednt, dtype=float)
        values = dict(enumerate(arr.tolist()))
        errors = {i: 0.0 for i in values}
    gs = ranking.graph
    fmt = "{:.17g}".format
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["state_bits", "ednt", "ednt_stderr", "rednt", "active_alarms"])
        for idx in ranking.order:
            state = gs.state_of(idx)
            bits = "".join(str(v) for v in state)
            w.writerow([bits, fmt(values[idx]), fmt(errors[idx]),
                        fmt(ranking.value_of(idx)), active_alarm_count(state)])
