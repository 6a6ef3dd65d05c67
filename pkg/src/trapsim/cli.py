"""Command-line front end: one subcommand per experiment.

Each subcommand reads an optional config file, applies flag overrides, runs
the experiment, writes results.csv / summary.json / config.txt to the output
directory, and exits 0 only if every declared tolerance passed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .harness import EXPERIMENTS, ExperimentConfig, parse_config, run


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="trapsim",
        description="Trap-model aging experiments with closed-form targets.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name.replace("_", "-"), help=f"run the {name} experiment")
        p.add_argument("--config", type=Path, help="config file (key = value lines)")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--workers", type=int, help="worker process count")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--tolerance-profile", choices=("ci", "paper"),
                       dest="tolerance_profile")
        p.set_defaults(experiment=name)
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    if args.config is not None:
        cfg = parse_config(args.config.read_text())
        if cfg.experiment != args.experiment:
            print(f"config declares experiment {cfg.experiment!r}, "
                  f"subcommand was {args.experiment!r}", file=sys.stderr)
            return 2
    else:
        cfg = ExperimentConfig(experiment=args.experiment)
    overrides = {}
    for key in ("seed", "workers", "tolerance_profile"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    if args.out is not None:
        overrides["out"] = str(args.out)
    if overrides:
        from dataclasses import replace
        cfg = replace(cfg, **overrides)
    try:
        report = run(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    from .harness import _jsonable
    status = "PASS" if report.all_pass else "FAIL"
    print(f"{cfg.experiment}: {status} "
          f"({len(report.rows)} rows, {report.wall_seconds:.1f}s, seed {cfg.seed})")
    for key, val in _jsonable(report.summary).items():
        print(f"  {key}: {val}")
    return 0 if report.all_pass else 1


if __name__ == "__main__":
    sys.exit(main())
