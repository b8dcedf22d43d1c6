"""CLI: one figure per invocation, vector output plus array-hash sidecar."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .plots import LAWS, BUILDERS, FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sinai-ppp-figs",
        description="figures from sinai-ppp experiment CSVs")
    parser.add_argument("kind", choices=sorted(BUILDERS))
    parser.add_argument("input", help="entries/counts/trials CSV")
    parser.add_argument("output", help="figure path (.svg/.pdf)")
    parser.add_argument("--eps", type=float, help="filter on the eps column")
    parser.add_argument("--label", type=int, help="filter on the target label")
    parser.add_argument("--law", choices=LAWS, default="chord")
    parser.add_argument("--shape-radius", type=float, default=1.0)
    parser.add_argument("--p", type=float, default=1.0 / 3.0,
                        help="geometric parameter for kind=geometric")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(kind=args.kind, inputs=(Path(args.input),),
                      output=Path(args.output), eps=args.eps, law=args.law,
                      label=args.label, shape_radius=args.shape_radius,
                      options={"p": args.p})
    hashes = render(spec)
    print(f"wrote {args.output} ({len(hashes)} plotted arrays hashed)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
