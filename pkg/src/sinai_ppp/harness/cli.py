"""Command-line entry point: one subcommand per experiment, plus validate."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import EXPERIMENTS, default_config, load_config, validate
from .experiments import run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sinai-ppp",
        description="Sinai billiard rare-event experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for exp in EXPERIMENTS + ("validate", "all"):
        p = sub.add_parser(exp.lower() if exp in ("validate", "all") else exp)
        p.add_argument("--config", help="JSON config (built-in default if omitted)")
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--workers", type=int, help="override worker_count")
        p.add_argument("--out", help="override output_dir")
        p.add_argument("--eps", type=float, nargs="+",
                       help="override eps_schedule")
        if exp == "validate":
            p.add_argument("--experiment", default="E1",
                           help="experiment id when no --config is given")
    return parser


def _config_for(args, experiment: str):
    overrides = {
        "master_seed": args.seed,
        "worker_count": args.workers,
        "output_dir": args.out,
        "eps_schedule": args.eps,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if args.config:
        return load_config(args.config, experiment=experiment, **overrides)
    return default_config(experiment, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "validate":
        cfg = _config_for(args, getattr(args, "experiment", "E1"))
        warnings = validate(cfg)
        for w in warnings:
            print(f"warning: {w}")
        print(f"{cfg.experiment}: config OK "
              f"(eps={list(cfg.eps_schedule)}, seed={cfg.master_seed})")
        return 0
    if args.command == "all":
        worst = 0
        for exp in EXPERIMENTS:
            code = run(_config_for(args, exp))
            print(f"{exp}: exit {code}")
            worst = max(worst, code)
        return worst
    return run(_config_for(args, args.command))


if __name__ == "__main__":
    sys.exit(main())
