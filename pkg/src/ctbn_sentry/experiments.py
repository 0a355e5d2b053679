"""Built-in synthetic experiments: six replicator networks and a report bundle.

Each experiment is a binary replicator model (slow drivers, fast followers)
whose sentry states are known by construction, plus analysis defaults.  The
three-process chain uses the canonical rate set (slow 1.0/5.0, fast 15.0,
base 0.1); the other shapes have no canonical parameterization and reuse the
same rate family.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .cascade import (
    NaiveParams,
    _low_activity_states,
    compare_rednt_vs_naive,
    write_cascade_report,
    write_comparison_report,
    write_naive_scores_report,
)
from .graphs import DiGraph
from .model import (
    CtbnModel,
    build_replicator_ctbn,
    build_state_space_graph,
    save_model,
    state_index,
)
from .sentry import ednt_exact, ednt_mc, rednt, write_sentry_report
from .simulate import SimulationConfig, derive_seed, sample_ensemble, write_ensemble_csv

DEFAULT_SEED = 20210611
DEFAULT_ALPHA = 0.1

# namespaces for per-purpose seed streams inside one experiment run
_DISPLAY_STREAM = 1
_ANALYSIS_STREAM = 2


@dataclass(frozen=True)
class ExperimentSpec:
    """A named network shape plus rates and analysis defaults."""

    name: str
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    slow: frozenset[str]
    slow_rate: tuple[float, float] = (1.0, 5.0)
    fast_rate: float = 15.0
    base_rate: float = 0.1
    alpha: float = DEFAULT_ALPHA
    t_end: float = 10.0 / DEFAULT_ALPHA
    trajectory_count: int = 10_000
    seed: int = DEFAULT_SEED
    max_active: int = 1
    min_cascade_length: int = 2
    fast_threshold: float | None = None  # None selects the pooled-median default
    display_trajectories: int = 10

    def graph(self) -> DiGraph:
        return DiGraph(self.nodes, self.edges)

    def build_model(self) -> CtbnModel:
        return build_replicator_ctbn(
            self.graph(), self.slow, self.slow_rate, self.fast_rate, self.base_rate)


def _chain(names: tuple[str, ...]) -> tuple[tuple[str, str], ...]:
    return tuple(zip(names[:-1], names[1:]))


EXPERIMENTS: dict[str, ExperimentSpec] = {
    spec.name: spec
    for spec in (
        ExperimentSpec(
            name="chain3",
            nodes=("A", "B", "C"),
            edges=_chain(("A", "B", "C")),
            slow=frozenset({"A"}),
        ),
        ExperimentSpec(
            name="chain5",
            nodes=("A", "B", "C", "D", "E"),
            edges=_chain(("A", "B", "C", "D", "E")),
            slow=frozenset({"A"}),
        ),
        ExperimentSpec(
            name="cycle5",
            nodes=("A", "B", "C", "D", "E"),
            edges=(("A", "B"), ("B", "C"), ("C", "A"), ("C", "D"), ("D", "E")),
            slow=frozenset({"A", "B", "C"}),
        ),
        ExperimentSpec(
            name="fork5",
            nodes=("A", "B", "C", "D", "E"),
            edges=(("A", "B"), ("A", "C"), ("B", "D"), ("C", "E")),
            slow=frozenset({"A"}),
        ),
        ExperimentSpec(
            name="cycle-chain6",
            nodes=("A", "B", "C", "D", "E", "F"),
            edges=(("A", "B"), ("B", "C"), ("C", "A"),
                   ("C", "D"), ("D", "E"), ("E", "F")),
            slow=frozenset({"A", "B", "C"}),
        ),
        # three independent slow drivers feed an AND gate that launches a deep
        # fast chain; the interesting launch state has three active alarms.
        # Symmetric slow toggling keeps the three-way conjunction alive long
        # enough for full cascades (the 1.0/5.0 pair makes it too short-lived).
        ExperimentSpec(
            name="complex9",
            nodes=("A", "B", "C", "D", "E", "F", "G", "H", "I"),
            edges=(("A", "D"), ("B", "D"), ("C", "D"),
                   ("D", "E"), ("E", "F"), ("F", "G"),
                   ("G", "H"), ("H", "I")),
            slow=frozenset({"A", "B", "C"}),
            slow_rate=(1.0, 1.0),
            max_active=3,
        ),
    )
}


def experiment_spec(name: str, **overrides) -> ExperimentSpec:
    """Look up a named experiment, optionally overriding analysis fields."""
    try:
        spec = EXPERIMENTS[name]
    except KeyError:
        raise ValueError(
            f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}") from None
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(spec, **overrides) if overrides else spec


def run_experiment(spec: ExperimentSpec, out_dir, exact_cap: int = 4096) -> dict[str, Path]:
    """Produce the full report bundle for one experiment.

    Writes model.json, a small display ensemble (trajectories.csv) with its
    cascade windows (cascades.csv), the EDNT/REDNT report (sentry.csv), the
    naive baseline over the analysis ensemble (naive_scores.csv), the
    REDNT-vs-naive comparison (comparison.csv), and a manifest of resolved
    parameters.  Deterministic for a fixed spec: identical runs produce
    byte-identical files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    model = spec.build_model()
    paths["model"] = out / "model.json"
    save_model(model, paths["model"])

    display = sample_ensemble(
        model, None,
        SimulationConfig(spec.t_end, spec.display_trajectories,
                         derive_seed(spec.seed, _DISPLAY_STREAM)))
    paths["trajectories"] = out / "trajectories.csv"
    write_ensemble_csv(display, paths["trajectories"], model.names)

    analysis_config = SimulationConfig(
        spec.t_end, spec.trajectory_count, derive_seed(spec.seed, _ANALYSIS_STREAM))
    analysis = sample_ensemble(model, None, analysis_config)
    comparison = compare_rednt_vs_naive(
        model, analysis_config,
        (NaiveParams(spec.fast_threshold, spec.min_cascade_length)
         if spec.fast_threshold is not None else None),
        k_range=None,  # every k up to the full filtered ranking
        alpha=spec.alpha,
        min_cascade_length=spec.min_cascade_length,
        exact_cap=exact_cap,
        trajectories=analysis,
    )
    params = NaiveParams(comparison.fast_threshold, spec.min_cascade_length)

    paths["cascades"] = out / "cascades.csv"
    write_cascade_report(paths["cascades"], display, params)

    gs = build_state_space_graph(model)
    if model.state_count <= exact_cap:
        ednt = ednt_exact(model, spec.alpha)
    else:
        # beyond the solve cap, estimate only the low-activity states and
        # the neighborhoods their REDNT values need
        wanted = set()
        for state in _low_activity_states(model, spec.max_active):
            idx = state_index(state, model)
            wanted.add(idx)
            wanted.update(gs.neighbors(idx))
        ednt = ednt_mc(model, spec.alpha, analysis_config, states=sorted(wanted))
    ranking = rednt(ednt, gs)
    paths["sentry"] = out / "sentry.csv"
    write_sentry_report(paths["sentry"], model, ednt, ranking)

    paths["naive_scores"] = out / "naive_scores.csv"
    write_naive_scores_report(paths["naive_scores"], comparison.scores)

    paths["comparison"] = out / "comparison.csv"
    write_comparison_report(paths["comparison"], comparison)

    paths["manifest"] = out / "manifest.json"
    manifest = {
        "experiment": spec.name,
        "nodes": list(spec.nodes),
        "edges": [list(e) for e in spec.edges],
        "slow_processes": sorted(spec.slow),
        "rates": {"slow": (list(spec.slow_rate)
                           if isinstance(spec.slow_rate, (tuple, list))
                           else spec.slow_rate),
                  "fast": spec.fast_rate, "base": spec.base_rate},
        "alpha": spec.alpha,
        "t_end": spec.t_end,
        "trajectory_count": spec.trajectory_count,
        "seed": spec.seed,
        "max_active": spec.max_active,
        "fast_threshold": comparison.fast_threshold,
        "min_cascade_length": spec.min_cascade_length,
    }
    with open(paths["manifest"], "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return paths
