"""Command-line surface: search / forward / learn / verify / lowerbound
bound-check runs plus the interactive session service."""
from __future__ import annotations

import argparse
import json
import sys

from . import harness
from .harness import ExperimentConfig


def _common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--instance", required=True,
                     help="grid:32x32 | line:0,1,3 | hier:4x5 | "
                          "random:n=128,dims=2,skew=1.0 | file:PATH")
    sub.add_argument("--trials", type=int, default=10_000)
    sub.add_argument("--seed", type=int, required=True,
                     help="master seed; all randomness derives from it")
    sub.add_argument("--tie-policy", choices=["probabilistic", "deterministic_lower_id"],
                     default="probabilistic")
    sub.add_argument("--p-first", type=float, default=0.5)
    sub.add_argument("--cap", type=int, default=None)
    sub.add_argument("--workers", type=int, default=1)
    sub.add_argument("--output", default=None,
                     help="record file (default: $NAVSEARCH_OUT or ./results)")
    sub.add_argument("--config", default=None,
                     help="JSON file of flag overrides")


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    fields = {
        "instance": args.instance,
        "trials": args.trials,
        "seed": args.seed,
        "tie_policy": args.tie_policy,
        "p_first": args.p_first,
        "cap": args.cap,
        "workers": args.workers,
        "output": args.output,
    }
    for name in ("policy", "epsilon", "proximity", "timeslots"):
        if hasattr(args, name):
            fields[name] = getattr(args, name)
    if getattr(args, "resample", None) is not None:
        fields["resample_shortcuts"] = args.resample
    if args.config:
        with open(args.config) as fh:
            fields.update(json.load(fh))
    return ExperimentConfig(**fields)


def _emit(record, config: ExperimentConfig, default_name: str) -> None:
    path = harness.output_path(config, default_name)
    harness.write_record(record, path)
    print(record.table())
    print(f"record appended to {path}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="navsearch",
        description="comparison-search and small-world bound experiments")
    subs = parser.add_subparsers(dest="command", required=True)

    p_search = subs.add_parser("search", help="greedy content search cost run")
    _common_flags(p_search)
    p_search.add_argument("--policy", choices=["exact", "uniform", "nonmetric"],
                          default="exact")
    p_search.add_argument("--proximity", type=int, default=None,
                          help="batch width p for proximity search")

    p_forward = subs.add_parser("forward", help="greedy forwarding cost run")
    _common_flags(p_forward)
    p_forward.add_argument("--resample", dest="resample", action="store_true",
                           default=True, help="redraw shortcuts per trial (default)")
    p_forward.add_argument("--frozen", dest="resample", action="store_false",
                           help="sample one shortcut set for the whole run")

    p_learn = subs.add_parser("learn", help="adaptive-learning convergence run")
    _common_flags(p_learn)
    p_learn.add_argument("--epsilon", type=float, default=0.1)
    p_learn.add_argument("--timeslots", type=int, default=10_000)

    p_verify = subs.add_parser("verify", help="structural validation suite")
    _common_flags(p_verify)
    p_verify.add_argument("--local-radius", type=float, default=None,
                          help="build local edges from this radius for the "
                               "closer-neighbor check")

    p_lower = subs.add_parser("lowerbound", help="hierarchical lower-bound report")
    _common_flags(p_lower)

    p_serve = subs.add_parser("serve", help="interactive session service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--seed", type=int, default=0)
    p_serve.add_argument("--data-dir", default="service-data")
    p_serve.add_argument("--ui", default=None,
                         help="directory with the built web client to serve at /")

    args = parser.parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service import create_app
        app = create_app(data_dir=args.data_dir, seed=args.seed, ui_dir=args.ui)
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
        return 0

    try:
        config = _config_from_args(args)
        if args.command == "search":
            record = harness.run_search_experiment(config)
        elif args.command == "forward":
            record = harness.run_forward_experiment(config)
        elif args.command == "learn":
            record = harness.run_learn_experiment(config)
        elif args.command == "verify":
            record = harness.run_verify(config, local_radius=args.local_radius)
        elif args.command == "lowerbound":
            record = harness.run_lowerbound(config)
        else:  # pragma: no cover
            parser.error(f"unknown command {args.command}")
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(record, config, f"{args.command}.jsonl")
    if record.bound_ok is False:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
