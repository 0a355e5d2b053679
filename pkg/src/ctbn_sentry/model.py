"""Continuous-time Bayesian network models.

A model is a collection of finite-state processes, each with a conditional
intensity matrix (CIM) per configuration of its parent processes, plus an
initial condition on the joint state space.  Everything downstream (sampling,
reward analysis, graph queries) consumes the :class:`CtbnModel` built here.

Indexing conventions (fixed so that files and tables are unambiguous):

* joint states are indexed mixed-radix over processes in declared order,
  first process most significant;
* parent configurations are indexed mixed-radix over the parent list in
  declared order, first-listed parent most significant.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.linalg import expm

from .graphs import DiGraph, is_ancestral

ROW_SUM_TOL = 1e-9
DEFAULT_STATE_CAP = 1 << 20

StateVector = tuple  # one local state per process, in model process order


class InvalidModelError(ValueError):
    """Raised when an operation requires a valid model but validation fails."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(v.message for v in self.violations[:5])
        more = "" if len(self.violations) <= 5 else f" (+{len(self.violations) - 5} more)"
        super().__init__(f"invalid model: {lines}{more}")


class StateSpaceCapError(ValueError):
    """Raised when the joint state space exceeds the configured cap."""


@dataclass(frozen=True)
class Violation:
    """One validation finding.  severity is 'error' or 'warning'."""

    severity: str
    code: str
    where: str
    message: str

    def to_json(self) -> str:
        return json.dumps(
            {"severity": self.severity, "code": self.code, "where": self.where,
             "message": self.message}
        )


@dataclass(frozen=True)
class ProcessSpec:
    """One component process: its name, local state count, and parents."""

    name: str
    cardinality: int
    parents: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))


@dataclass(frozen=True)
class Cim:
    """Conditional intensity matrices for one process.

    ``matrices`` has shape (parent_config_count, cardinality, cardinality);
    configuration c holds the intensity matrix active when the parents are in
    the mixed-radix configuration c.
    """

    matrices: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.matrices, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "matrices", arr)

    @property
    def parent_config_count(self) -> int:
        return self.matrices.shape[0]


@dataclass(frozen=True)
class CtbnModel:
    """A CTBN: processes, their CIMs, and an initial condition.

    Exactly one of ``initial_state`` (a point mass) or
    ``initial_distribution`` (a probability vector over joint state indices)
    should be given.  Instances are immutable and safe to share across
    threads.
    """

    processes: tuple[ProcessSpec, ...]
    cims: tuple[Cim, ...]
    initial_state: tuple[int, ...] | None = None
    initial_distribution: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "processes", tuple(self.processes))
        object.__setattr__(
            self, "cims",
            tuple(c if isinstance(c, Cim) else Cim(c) for c in self.cims),
        )
        if self.initial_state is not None:
            object.__setattr__(self, "initial_state", tuple(int(v) for v in self.initial_state))
        if self.initial_distribution is not None:
            arr = np.asarray(self.initial_distribution, dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, "initial_distribution", arr)

    # -- derived structure ------------------------------------------------

    @property
    def process_count(self) -> int:
        return len(self.processes)

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.processes)

    @cached_property
    def name_to_index(self) -> dict[str, int]:
        return {p.name: j for j, p in enumerate(self.processes)}

    @cached_property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(p.cardinality for p in self.processes)

    @cached_property
    def state_count(self) -> int:
        n = 1
        for c in self.cardinalities:
            n *= c
        return n

    @cached_property
    def state_multipliers(self) -> tuple[int, ...]:
        """Mixed-radix place values; first process most significant."""
        mults = [1] * self.process_count
        for j in range(self.process_count - 2, -1, -1):
            mults[j] = mults[j + 1] * self.cardinalities[j + 1]
        return tuple(mults)

    @cached_property
    def parent_indices(self) -> tuple[tuple[int, ...], ...]:
        return tuple(
            tuple(self.name_to_index[name] for name in p.parents)
            for p in self.processes
        )

    @cached_property
    def parent_multipliers(self) -> tuple[tuple[int, ...], ...]:
        """Place values for parent configurations, first parent most significant."""
        out = []
        for j, p in enumerate(self.processes):
            cards = [self.cardinalities[i] for i in self.parent_indices[j]]
            mults = [1] * len(cards)
            for k in range(len(cards) - 2, -1, -1):
                mults[k] = mults[k + 1] * cards[k + 1]
            out.append(tuple(mults))
        return tuple(out)

    @cached_property
    def children_indices(self) -> tuple[tuple[int, ...], ...]:
        kids: list[list[int]] = [[] for _ in self.processes]
        for j, parents in enumerate(self.parent_indices):
            for p in parents:
                kids[p].append(j)
        return tuple(tuple(sorted(k)) for k in kids)

    def process_index(self, process: int | str) -> int:
        if isinstance(process, str):
            return self.name_to_index[process]
        return int(process)

    def point_initial_state(self) -> tuple[int, ...] | None:
        return self.initial_state


# -- state indexing --------------------------------------------------------


def state_index(state: Sequence[int], model: CtbnModel) -> int:
    """Mixed-radix index of a joint state (first process most significant)."""
    cards = model.cardinalities
    if len(state) != len(cards):
        raise ValueError(f"state has {len(state)} entries, model has {len(cards)} processes")
    idx = 0
    for v, c, m in zip(state, cards, model.state_multipliers):
        v = int(v)
        if not 0 <= v < c:
            raise ValueError(f"local state {v} out of range for cardinality {c}")
        idx += v * m
    return idx


def state_from_index(index: int, model: CtbnModel) -> tuple[int, ...]:
    """Inverse of :func:`state_index`."""
    if not 0 <= index < model.state_count:
        raise ValueError(f"state index {index} out of range")
    values = []
    for m, c in zip(model.state_multipliers, model.cardinalities):
        v, index = divmod(index, m)
        values.append(v)
    return tuple(values)


def enumerate_states(model: CtbnModel) -> Iterator[tuple[int, ...]]:
    """Yield all joint states in index order."""
    return itertools.product(*(range(c) for c in model.cardinalities))


def active_alarm_count(state: Sequence[int]) -> int:
    """Number of non-zero local states (number of alarms that are on)."""
    return int(sum(1 for v in state if v))


# -- validation -------------------------------------------------------------


def validate_model(model: CtbnModel, include_warnings: bool = False) -> list[Violation]:
    """Collect every constraint violation; an empty list means the model is valid.

    Zero exit rates (absorbing local states) are reported as warnings and do
    not make a model invalid; pass ``include_warnings=True`` to see them.
    """
    out: list[Violation] = []
    err = lambda code, where, msg: out.append(Violation("error", code, where, msg))

    seen: set[str] = set()
    for p in model.processes:
        if p.name in seen:
            err("duplicate-name", p.name, f"process name {p.name!r} declared more than once")
        seen.add(p.name)
        if p.cardinality < 2:
            err("cardinality", p.name, f"process {p.name!r} has cardinality {p.cardinality} < 2")

    names = set(model.names)
    structurally_ok = []
    for p in model.processes:
        ok = True
        for parent in p.parents:
            if parent == p.name:
                err("self-parent", p.name, f"process {p.name!r} lists itself as a parent")
                ok = False
            elif parent not in names:
                err("dangling-parent", p.name,
                    f"process {p.name!r} references unknown parent {parent!r}")
                ok = False
        structurally_ok.append(ok)

    if len(model.cims) != len(model.processes):
        err("cim-count", "<model>",
            f"{len(model.cims)} CIMs for {len(model.processes)} processes")
        return out if include_warnings else [v for v in out if v.severity == "error"]

    for j, (p, cim) in enumerate(zip(model.processes, model.cims)):
        mats = cim.matrices
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            err("cim-shape", p.name, f"CIM for {p.name!r} is not a stack of square matrices")
            continue
        if mats.shape[1] != p.cardinality:
            err("cim-shape", p.name,
                f"CIM for {p.name!r} has side {mats.shape[1]}, expected {p.cardinality}")
            continue
        if structurally_ok[j]:
            expected = 1
            for parent in p.parents:
                expected *= model.processes[model.name_to_index[parent]].cardinality
            if mats.shape[0] != expected:
                err("cim-shape", p.name,
                    f"CIM for {p.name!r} has {mats.shape[0]} parent configurations, "
                    f"expected {expected}")
                continue
        for cfg in range(mats.shape[0]):
            mat = mats[cfg]
            where = f"{p.name}[config {cfg}]"
            off = mat.copy()
            np.fill_diagonal(off, 0.0)
            if (off < 0).any():
                err("negative-rate", where, f"negative off-diagonal rate in {where}")
            if (np.diag(mat) > 0).any():
                err("positive-diagonal", where, f"positive diagonal entry in {where}")
            bad_rows = np.flatnonzero(np.abs(mat.sum(axis=1)) > ROW_SUM_TOL)
            for r in bad_rows:
                err("row-sum", where,
                    f"row {r} of {where} sums to {mat[r].sum():.3g}, expected 0")
            for r in np.flatnonzero(np.abs(np.diag(mat)) == 0.0):
                out.append(Violation(
                    "warning", "absorbing-state", where,
                    f"local state {r} of {where} has exit rate 0 (absorbing)"))

    if (model.initial_state is None) == (model.initial_distribution is None):
        err("initial", "<model>",
            "exactly one of initial_state / initial_distribution must be set")
    elif model.initial_state is not None:
        if len(model.initial_state) != model.process_count:
            err("initial", "<model>",
                f"initial state has {len(model.initial_state)} entries, "
                f"expected {model.process_count}")
        else:
            for v, p in zip(model.initial_state, model.processes):
                if not 0 <= v < p.cardinality:
                    err("initial", p.name,
                        f"initial local state {v} out of range for {p.name!r}")
    else:
        dist = model.initial_distribution
        if not out:  # state_count only meaningful on structurally sound models
            if dist.shape != (model.state_count,):
                err("initial", "<model>",
                    f"initial distribution has length {dist.shape}, "
                    f"expected {model.state_count}")
            else:
                if (dist < 0).any():
                    err("initial", "<model>", "initial distribution has negative entries")
                if abs(dist.sum() - 1.0) > ROW_SUM_TOL:
                    err("initial", "<model>",
                        f"initial distribution sums to {dist.sum():.12g}, expected 1")

    if include_warnings:
        return out
    return [v for v in out if v.severity == "error"]


def require_valid(model: CtbnModel) -> None:
    violations = validate_model(model)
    if violations:
        raise InvalidModelError(violations)


# -- rate lookups and amalgamation ------------------------------------------


def parent_config_index(model: CtbnModel, process: int | str, state: Sequence[int]) -> int:
    """Mixed-radix index of the parent configuration extracted from `state`."""
    j = model.process_index(process)
    idx = 0
    for p, m in zip(model.parent_indices[j], model.parent_multipliers[j]):
        idx += int(state[p]) * m
    return idx


def local_rate(model: CtbnModel, process: int | str, state: Sequence[int]) -> np.ndarray:
    """Active intensity-matrix row for a process in a given joint state.

    The row is selected by the parent configuration read off ``state`` and
    the process's own current local state.
    """
    j = model.process_index(process)
    cfg = parent_config_index(model, j, state)
    return model.cims[j].matrices[cfg][int(state[j])]


def amalgamate(model: CtbnModel, max_states: int = DEFAULT_STATE_CAP) -> np.ndarray:
    """Flatten the CTBN into a dense intensity matrix over the joint space.

    Entry (x, y) for states differing only in process j is j's local
    transition rate under x's parent configuration; states differing in two
    or more components get rate 0, and the diagonal closes each row to 0.
    """
    require_valid(model)
    n = model.state_count
    if n > max_states:
        raise StateSpaceCapError(f"joint state space has {n} states, cap is {max_states}")
    Q = np.zeros((n, n))
    mults = model.state_multipliers
    for i, x in enumerate(enumerate_states(model)):
        for j in range(model.process_count):
            row = local_rate(model, j, x)
            xj = x[j]
            for s in range(model.cardinalities[j]):
                if s == xj:
                    continue
                rate = row[s]
                if rate != 0.0:
                    Q[i, i + (s - xj) * mults[j]] = rate
        Q[i, i] = -Q[i].sum()
    Q.flags.writeable = False
    return Q


def transient_distribution(intensity: np.ndarray, initial: np.ndarray, t: float) -> np.ndarray:
    """Exact state distribution at time t via the matrix exponential.

    Only intended for small instances; used as the ground-truth oracle for
    the trajectory sampler.
    """
    p0 = np.asarray(initial, dtype=float)
    return p0 @ expm(np.asarray(intensity) * float(t))


# -- state space graph --------------------------------------------------------


@dataclass(frozen=True)
class StateSpaceGraph:
    """Undirected graph on joint states; edges join states one local flip apart.

    The structure is regular, so adjacency is computed arithmetically rather
    than stored.
    """

    cardinalities: tuple[int, ...]

    @cached_property
    def multipliers(self) -> tuple[int, ...]:
        mults = [1] * len(self.cardinalities)
        for j in range(len(self.cardinalities) - 2, -1, -1):
            mults[j] = mults[j + 1] * self.cardinalities[j + 1]
        return tuple(mults)

    @property
    def node_count(self) -> int:
        n = 1
        for c in self.cardinalities:
            n *= c
        return n

    @property
    def degree(self) -> int:
        return sum(c - 1 for c in self.cardinalities)

    def state_of(self, index: int) -> tuple[int, ...]:
        values = []
        for m in self.multipliers:
            v, index = divmod(index, m)
            values.append(v)
        return tuple(values)

    def index_of(self, state: Sequence[int]) -> int:
        return sum(int(v) * m for v, m in zip(state, self.multipliers))

    def neighbors(self, index: int) -> list[int]:
        """Indices of all states differing from `index` in exactly one process."""
        values = self.state_of(index)
        out = []
        for j, (v, c, m) in enumerate(zip(values, self.cardinalities, self.multipliers)):
            for s in range(c):
                if s != v:
                    out.append(index + (s - v) * m)
        return out

    def is_adjacent(self, i: int, j: int) -> bool:
        return i != j and j in self.neighbors(i)

    def edges(self) -> Iterator[tuple[int, int]]:
        for i in range(self.node_count):
            for j in self.neighbors(i):
                if j > i:
                    yield (i, j)


def build_state_space_graph(model: CtbnModel, max_states: int = DEFAULT_STATE_CAP) -> StateSpaceGraph:
    require_valid(model)
    if model.state_count > max_states:
        raise StateSpaceCapError(
            f"joint state space has {model.state_count} states, cap is {max_states}")
    return StateSpaceGraph(model.cardinalities)


# -- CTBN graph and replicator construction ----------------------------------


def ctbn_graph(model: CtbnModel) -> DiGraph:
    """The dependence graph: an edge parent -> process per CIM dependence."""
    edges = []
    for p in model.processes:
        for parent in p.parents:
            edges.append((parent, p.name))
    return DiGraph(model.names, edges)


def _toggler(up: float, down: float) -> np.ndarray:
    return np.array([[-up, up], [down, -down]])


def _replicator_matrix(target: int, toward_up: float, toward_down: float,
                       base: float) -> np.ndarray:
    # moves toward `target` at the toward rate and away from it at `base`
    if target == 1:
        return np.array([[-toward_up, toward_up], [base, -base]])
    return np.array([[-base, base], [toward_down, -toward_down]])


def build_replicator_ctbn(
    graph: DiGraph,
    slow_processes: Iterable[str],
    slow_rate: float | tuple[float, float],
    fast_rate: float,
    base_rate: float,
) -> CtbnModel:
    """Binary model where each process replicates the joint state of its parents.

    Processes without parents toggle on their own at the slow rate(s);
    a scalar ``slow_rate`` gives a symmetric toggler, a pair gives separate
    off->on and on->off rates.  A process with parents moves toward 1 only
    when *all* parents are 1 (otherwise toward 0); the move toward its target
    happens at ``fast_rate`` (or the slow rates, for processes listed in
    ``slow_processes``) and the move away from it at ``base_rate``.

    The initial state is all zeros.
    """
    if isinstance(slow_rate, (int, float)):
        slow_up = slow_down = float(slow_rate)
    else:
        slow_up, slow_down = (float(r) for r in slow_rate)
    slow = set(slow_processes)
    for rate, label in ((slow_up, "slow"), (slow_down, "slow"),
                        (fast_rate, "fast"), (base_rate, "base")):
        if rate <= 0:
            raise ValueError(f"{label} rate must be positive, got {rate}")
    if max(slow_up, slow_down) >= fast_rate or base_rate >= fast_rate:
        raise ValueError("expected slow and base rates below the fast rate")
    unknown = slow - set(graph.nodes)
    if unknown:
        raise ValueError(f"slow processes not in graph: {sorted(unknown)}")

    processes = []
    cims = []
    for name in graph.nodes:
        parents = tuple(n for n in graph.nodes if n in graph.parents_of(name))
        processes.append(ProcessSpec(name, 2, parents))
        if not parents:
            cims.append(Cim(_toggler(slow_up, slow_down)[None, :, :]))
            continue
        toward = (slow_up, slow_down) if name in slow else (fast_rate, fast_rate)
        mats = []
        for config in itertools.product((0, 1), repeat=len(parents)):
            target = 1 if all(config) else 0
            mats.append(_replicator_matrix(target, toward[0], toward[1], base_rate))
        cims.append(Cim(np.stack(mats)))
    return CtbnModel(tuple(processes), tuple(cims),
                     initial_state=(0,) * len(processes))


# -- ancestral restriction ----------------------------------------------------


def ancestral_subprocess(model: CtbnModel, keep: Iterable[str]) -> CtbnModel:
    """Restrict the model to an ancestral set of processes.

    The restricted processes keep their CIMs unchanged, so the restricted
    model's law equals the full model's marginal law on those processes.
    Raises ``ValueError`` if the set is not ancestral.
    """
    keep = set(keep)
    g = ctbn_graph(model)
    if not is_ancestral(g, keep):
        raise ValueError(f"{sorted(keep)} is not an ancestral process set")
    kept = [j for j, p in enumerate(model.processes) if p.name in keep]
    processes = tuple(model.processes[j] for j in kept)
    cims = tuple(model.cims[j] for j in kept)
    if model.initial_state is not None:
        return CtbnModel(processes, cims,
                         initial_state=tuple(model.initial_state[j] for j in kept))
    # marginalize an explicit joint distribution onto the kept coordinates
    sub = CtbnModel(processes, cims, initial_state=(0,) * len(kept))
    dist = np.zeros(sub.state_count)
    for i, x in enumerate(enumerate_states(model)):
        restricted = tuple(x[j] for j in kept)
        dist[state_index(restricted, sub)] += model.initial_distribution[i]
    return CtbnModel(processes, cims, initial_distribution=dist)


# -- model files and DOT export ----------------------------------------------


def model_to_json_dict(model: CtbnModel) -> dict:
    doc: dict = {
        "processes": [
            {"name": p.name, "cardinality": p.cardinality, "parents": list(p.parents)}
            for p in model.processes
        ],
        "cims": {p.name: c.matrices.tolist() for p, c in zip(model.processes, model.cims)},
    }
    if model.initial_state is not None:
        doc["initial_state"] = list(model.initial_state)
    if model.initial_distribution is not None:
        doc["initial_distribution"] = model.initial_distribution.tolist()
    return doc


def model_from_json_dict(doc: dict, reject_unknown: bool = False) -> CtbnModel:
    known = {"processes", "cims", "initial_state", "initial_distribution"}
    if reject_unknown:
        extra = set(doc) - known
        if extra:
            raise ValueError(f"unknown model fields: {sorted(extra)}")
    processes = tuple(
        ProcessSpec(p["name"], int(p["cardinality"]), tuple(p.get("parents", ())))
        for p in doc["processes"]
    )
    raw_cims = doc["cims"]
    if isinstance(raw_cims, dict):
        cims = tuple(Cim(np.asarray(raw_cims[p.name], dtype=float)) for p in processes)
    else:  # accept a list aligned with the process order
        cims = tuple(Cim(np.asarray(c, dtype=float)) for c in raw_cims)
    initial_state = doc.get("initial_state")
    initial_distribution = doc.get("initial_distribution")
    return CtbnModel(
        processes, cims,
        initial_state=tuple(initial_state) if initial_state is not None else None,
        initial_distribution=(np.asarray(initial_distribution, dtype=float)
                              if initial_distribution is not None else None),
    )


def save_model(model: CtbnModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_json_dict(model), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path, reject_unknown: bool = False) -> CtbnModel:
    with open(path) as fh:
        doc = json.load(fh)
    return model_from_json_dict(doc, reject_unknown=reject_unknown)


def model_to_dot(model: CtbnModel) -> str:
    lines = ["digraph ctbn {"]
    for name in model.names:
        lines.append(f'  "{name}";')
    for p in model.processes:
        for parent in p.parents:
            lines.append(f'  "{parent}" -> "{p.name}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def state_space_to_dot(model: CtbnModel, max_states: int = 4096) -> str:
    gs = build_state_space_graph(model, max_states=max_states)
    lines = ["graph state_space {"]
    for i in range(gs.node_count):
        label = "".join(str(v) for v in gs.state_of(i))
        lines.append(f'  s{i} [label="{label}"];')
    for i, j in gs.edges():
        lines.append(f"  s{i} -- s{j};")
    lines.append("}")
    return "\n".join(lines) + "\n"
