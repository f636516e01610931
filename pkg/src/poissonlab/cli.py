"""Command line entry point: ``poissonlab <experiment> [options]``.

Exit codes: 0 when every check passes, 1 on a statistical rejection,
2 on configuration or runtime errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import PoissonLabError
from .experiments import EXPERIMENTS, ExperimentConfig, emit_report, report_json, run_experiment

EXIT_PASS, EXIT_REJECT, EXIT_ERROR = 0, 1, 2


def build_parser():
    parser = argparse.ArgumentParser(prog="poissonlab",
                                     description="Poisson limit experiments for runs and "
                                                 "Voronoi tessellations.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="JSON experiment config (defaults are built in)")
        p.add_argument("--seed", type=int)
        p.add_argument("--replicates", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--out", help="directory for report.json and CSV tables")
        p.add_argument("--describe", action="store_true",
                       help="print the resolved config and exit without simulating")
    return parser


def load_config(args):
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        if cfg.experiment != args.experiment:
            raise PoissonLabError(
                f"config is for {cfg.experiment!r}, not {args.experiment!r}")
    else:
        cfg = ExperimentConfig.default(args.experiment)
    for key in ("seed", "replicates", "workers", "out"):
        val = getattr(args, key)
        if val is not None:
            setattr(cfg, key, val)
    return cfg.validate()


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        if args.describe:
            print(json.dumps(cfg.describe(), indent=2, sort_keys=True, default=str))
            return EXIT_PASS
        out, cfg.out = cfg.out, None
        report = run_experiment(cfg)
        if out:
            emit_report(report, out)
    except (PoissonLabError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    verdict = report["verdict"]
    if not out:
        sys.stdout.write(report_json(report))
    for c in verdict["checks"]:
        print(f"{'PASS' if c['pass'] else 'FAIL'} {c['name']}", file=sys.stderr)
    return EXIT_PASS if verdict["pass"] else EXIT_REJECT


if __name__ == "__main__":
    sys.exit(main())
