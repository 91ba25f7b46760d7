"""Command-line entry point.

    turnpike-lab <experiment> --config FILE [--set key=value ...] [--out DIR] [--check]

Experiments: exp0, sweep-lambda2, sweep-kappa, stationary, rate, escape,
landscape. Exit codes: 0 success, 2 config error, 3 numerical failure,
4 check-threshold failure in --check mode.
"""

from __future__ import annotations

import argparse
import sys

from .errors import NumericalError
from .experiments.config import load_config
from .experiments.runs import CheckFailure, check_experiment, run_experiment

EXPERIMENT_NAMES = ["exp0", "sweep-lambda2", "sweep-kappa", "stationary", "rate", "escape", "landscape"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="turnpike-lab",
                                     description="Mean-field Transformer turnpike experiments")
    parser.add_argument("experiment", choices=EXPERIMENT_NAMES)
    parser.add_argument("--config", metavar="FILE", default=None, help="TOML configuration file")
    parser.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                        dest="overrides", help="override a dotted config field")
    parser.add_argument("--out", metavar="DIR", default=None, help="output directory")
    parser.add_argument("--check", action="store_true",
                        help="verify acceptance thresholds for this experiment after the run")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, overrides=args.overrides,
                          experiment=args.experiment.replace("-", "_"),
                          output_dir=args.out)
    except (OSError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        manifest = run_experiment(cfg)
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    print(f"run complete: {manifest.path}")
    if args.check:
        try:
            check_experiment(cfg, manifest)
        except CheckFailure as exc:
            print(f"check failed: {exc}", file=sys.stderr)
            return 4
        print("all checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
