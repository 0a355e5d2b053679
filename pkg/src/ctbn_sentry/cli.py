"""Command-line front end.

Subcommands: validate, simulate, sentry, cascades, graph, experiment.
Exit codes: 0 success, 1 domain violation, 2 unreadable input or usage error.
Every randomized command takes --seed and defaults to a fixed constant, so
identical invocations produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import cascade as _cascade
from . import graphs as _graphs
from . import model as _model
from . import sentry as _sentry
from . import simulate as _sim
from .experiments import DEFAULT_SEED, EXPERIMENTS, experiment_spec, run_experiment

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_IO = 2


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _nonneg_float(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _cascade_length(text: str) -> int:
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError(
            f"minimum cascade length must be >= 2, got {text}")
    return value


def _parse_initial(text: str, model: _model.CtbnModel) -> tuple[int, ...]:
    """Accept '0,1,0' or compact digits '010' (one digit per process)."""
    try:
        if "," in text:
            values = tuple(int(v) for v in text.split(","))
        else:
            values = tuple(int(ch) for ch in text.strip())
        _model.state_index(values, model)  # validates length and ranges
        return values
    except (ValueError, KeyError) as exc:
        raise ValueError(f"invalid initial state {text!r}: {exc}") from exc


def _load_model(path: str) -> _model.CtbnModel:
    try:
        return _model.load_model(path)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise _UnreadableInput(f"cannot read model {path!r}: {exc}") from exc


class _UnreadableInput(Exception):
    pass


def _node_set(text: str | None) -> list[str]:
    if not text:
        return []
    return [t.strip() for t in text.split(",") if t.strip()]


# -- commands -------------------------------------------------------------------


def cmd_validate(args) -> int:
    model = _load_model(args.model)
    violations = _model.validate_model(model, include_warnings=True)
    for v in violations:
        print(v.to_json())
    errors = [v for v in violations if v.severity == "error"]
    return EXIT_DOMAIN if errors else EXIT_OK


def cmd_simulate(args) -> int:
    model = _load_model(args.model)
    _model.require_valid(model)
    initial = _parse_initial(args.initial, model) if args.initial else None
    config = _sim.SimulationConfig(args.t_end, args.trajectories, args.seed)
    trajectories = _sim.sample_ensemble(model, initial, config)
    out = Path(args.out)
    if args.single_file:
        out.parent.mkdir(parents=True, exist_ok=True)
        _sim.write_ensemble_csv(trajectories, out, model.names)
        print(f"wrote {len(trajectories)} trajectories to {out}")
    else:
        out.mkdir(parents=True, exist_ok=True)
        for k, traj in enumerate(trajectories):
            _sim.write_trajectory_csv(traj, out / f"trajectory_{k:05d}.csv", model.names)
        print(f"wrote {len(trajectories)} trajectory files to {out}/")
    return EXIT_OK


def cmd_sentry(args) -> int:
    model = _load_model(args.model)
    _model.require_valid(model)
    gs = _model.build_state_space_graph(model)
    config = _sim.SimulationConfig(args.t_end, args.trajectories, args.seed)

    if args.exact:
        ednt = _sentry.ednt_exact(model, args.alpha)
    elif args.epsilon is not None:
        states = _requested_states(model, gs, args.max_active)
        results = [
            _sentry.stopping_rule_ednt(
                model, _model.state_from_index(idx, model), args.alpha, args.t_end,
                args.epsilon, cap=args.trajectories,
                seed=_sim.derive_seed(args.seed, idx))
            for idx in states
        ]
        ednt = _sentry.EdntTable(
            np.array(states),
            np.array([r.estimate for r in results]),
            np.array([r.stderr for r in results]),
            np.array([r.trajectories_used for r in results]),
        )
    else:
        states = _requested_states(model, gs, args.max_active)
        ednt = _sentry.ednt_mc(model, args.alpha, config, states=states)

    ranking = _sentry.rednt(ednt, gs)
    if ranking.flags:
        flagged = sorted(set(ranking.flags.values()))
        print(f"note: degenerate REDNT entries present ({', '.join(flagged)})",
              file=sys.stderr)
    _sentry.write_sentry_report(args.out, model, ednt, ranking)
    print(f"wrote sentry report to {args.out}")
    return EXIT_OK


def _requested_states(model, gs, max_active) -> list[int]:
    if max_active is None:
        return list(range(model.state_count))
    filtered = [
        _model.state_index(s, model)
        for s in _cascade._low_activity_states(model, max_active)
    ]
    wanted = set(filtered)
    for idx in filtered:
        wanted.update(gs.neighbors(idx))
    return sorted(wanted)


def cmd_cascades(args) -> int:
    try:
        with open(args.trajectories) as fh:
            header = fh.readline().strip()
    except OSError as exc:
        raise _UnreadableInput(f"cannot read {args.trajectories!r}: {exc}") from exc
    if header.startswith("trajectory_id"):
        trajectories, _names = _sim.read_ensemble_csv(args.trajectories)
    else:
        traj, _names = _sim.read_trajectory_csv(args.trajectories)
        trajectories = [traj]

    if args.fast_threshold is not None:
        threshold = args.fast_threshold
    else:
        try:
            threshold = _cascade.default_fast_threshold(trajectories)
        except ValueError:
            threshold = None  # no gaps at all: reports stay empty
    if threshold is None:
        params = None
        scores = _cascade.NaiveScores()
    else:
        params = _cascade.NaiveParams(threshold, args.min_length)
        scores = _cascade.naive_scores(trajectories, params)
        print(f"fast threshold: {threshold:.6g}")

    if params is not None:
        _cascade.write_cascade_report(args.out_cascades, trajectories, params)
    else:
        with open(args.out_cascades, "w") as fh:
            fh.write("trajectory_id,start_time,end_time,length,sentry_state_bits\n")
    _cascade.write_naive_scores_report(args.out_scores, scores)
    print(f"wrote {args.out_cascades} and {args.out_scores}")
    return EXIT_OK


def cmd_graph(args) -> int:
    model = _load_model(args.model)
    g = _model.ctbn_graph(model)

    if args.query == "moralize":
        text = _graphs.ugraph_to_dot(_graphs.moralize(g), "moral")
        _emit(text, args.out)
    elif args.query == "condense":
        cond = _graphs.condensation(g)
        doc = {
            "blocks": {name: sorted(members) for name, members in cond.blocks.items()},
            "edges": [list(e) for e in cond.graph.edges],
        }
        _emit(json.dumps(doc, indent=1) + "\n", args.out)
        if args.dot:
            Path(args.dot).write_text(_graphs.partition_to_dot(cond, "condensation"))
    elif args.query == "partition":
        if not args.blocks_file:
            raise ValueError("partition requires --blocks-file")
        try:
            with open(args.blocks_file) as fh:
                blocks = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise _UnreadableInput(f"cannot read blocks file: {exc}") from exc
        part = _graphs.graph_partition(g, blocks)
        doc = {
            "blocks": {name: sorted(members) for name, members in part.blocks.items()},
            "edges": [list(e) for e in part.graph.edges],
        }
        _emit(json.dumps(doc, indent=1) + "\n", args.out)
        if args.dot:
            Path(args.dot).write_text(_graphs.partition_to_dot(part))
    else:  # separate
        cert = _graphs.ctbn_independent(
            g, _node_set(args.a), _node_set(args.b), _node_set(args.c))
        _emit(cert.to_json() + "\n", args.out)
    return EXIT_OK


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_experiment(args) -> int:
    spec = experiment_spec(
        args.name,
        seed=args.seed,
        alpha=args.alpha,
        t_end=args.t_end,
        trajectory_count=args.trajectories,
        max_active=args.max_active,
        fast_threshold=args.fast_threshold,
        min_cascade_length=args.min_length,
        display_trajectories=args.display_trajectories,
    )
    paths = run_experiment(spec, args.out)
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return EXIT_OK


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctbn-sentry",
        description="Model, simulate, and analyze cascading alarm processes.",
        allow_abbrev=False,
    )
    parser.add_argument("--config", help="JSON file of flag defaults; flags override")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model file against all constraints")
    p.add_argument("model")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="sample trajectories to CSV")
    p.add_argument("model")
    p.add_argument("--initial", help="initial state, e.g. 0,0,0 or 000")
    p.add_argument("--t-end", type=_nonneg_float, default=10.0)
    p.add_argument("--trajectories", type=_positive_int, default=1)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", required=True, help="output directory (or file with --single-file)")
    p.add_argument("--single-file", action="store_true",
                   help="write one CSV with a trajectory_id column")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sentry", help="EDNT/REDNT report")
    p.add_argument("model")
    p.add_argument("--alpha", type=_positive_float, default=0.1)
    p.add_argument("--t-end", type=_positive_float, default=100.0)
    p.add_argument("--trajectories", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--max-active", type=int, default=None,
                   help="estimate only states with at most this many active alarms "
                        "(plus their neighbors)")
    p.add_argument("--exact", action="store_true", help="solve the linear system")
    p.add_argument("--epsilon", type=_positive_float, default=None,
                   help="relative half-width target for the sequential stopping rule")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sentry)

    p = sub.add_parser("cascades", help="cascade windows and naive scores from a trajectory CSV")
    p.add_argument("trajectories")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--fast-threshold", type=_positive_float, default=None)
    group.add_argument("--auto-threshold", action="store_true",
                       help="use the pooled median inter-event gap")
    p.add_argument("--min-length", type=_cascade_length, default=2)
    p.add_argument("--out-cascades", required=True)
    p.add_argument("--out-scores", required=True)
    p.set_defaults(func=cmd_cascades)

    p = sub.add_parser("graph", help="dependence-graph queries")
    p.add_argument("model")
    p.add_argument("query", choices=["moralize", "condense", "partition", "separate"])
    p.add_argument("--a", help="comma-separated node set A")
    p.add_argument("--b", help="comma-separated node set B")
    p.add_argument("--c", help="comma-separated node set C", default="")
    p.add_argument("--blocks-file", help="JSON mapping block name -> member list")
    p.add_argument("--dot", help="also write a DOT rendering here")
    p.add_argument("--out", help="write output here instead of stdout")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("experiment", help="run a built-in experiment end to end")
    p.add_argument("name", choices=sorted(EXPERIMENTS))
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--alpha", type=_positive_float, default=None)
    p.add_argument("--t-end", type=_positive_float, default=None, dest="t_end")
    p.add_argument("--trajectories", type=_positive_int, default=None)
    p.add_argument("--max-active", type=int, default=None)
    p.add_argument("--fast-threshold", type=_positive_float, default=None)
    p.add_argument("--min-length", type=_cascade_length, default=None)
    p.add_argument("--display-trajectories", type=_positive_int, default=None)
    p.set_defaults(func=cmd_experiment)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Peel off --config and fold its values in as parser defaults."""
    probe = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return argv
    try:
        with open(known.config) as fh:
            values = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config file: {exc}")
    if not isinstance(values, dict):
        parser.error("config file must hold a JSON object of flag values")
    cleaned = {key.replace("-", "_"): val for key, val in values.items()}
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            sp.set_defaults(**{k: v for k, v in cleaned.items()
                               if k in {a.dest for a in sp._actions}})
    return argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    argv = _apply_config(parser, argv)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UnreadableInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (_model.InvalidModelError, _model.StateSpaceCapError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
