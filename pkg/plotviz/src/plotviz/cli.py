"""Command line: plotviz plot --series <label>=<csv> [--series ...] --out <png> [--title T]."""

from __future__ import annotations

import argparse
import sys

from . import PlotSpec, SchemaError, render


def split_pair(value: str, flag: str) -> tuple[str, str]:
    label, sep, rest = value.partition("=")
    if not sep or not label or not rest:
        raise SystemExit(f"error: {flag} expects <label>=<value>, got {value!r}")
    return label, rest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plotviz", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    plot = sub.add_parser("plot", help="render mean curves with 2-std bands from decmab CSVs")
    plot.add_argument(
        "--series", action="append", required=True, metavar="LABEL=CSV",
        help="one input series; repeat for multiple curves",
    )
    plot.add_argument("--out", required=True, help="output image path (png)")
    plot.add_argument("--title", default=None)
    plot.add_argument(
        "--color", action="append", default=[], metavar="LABEL=COLOR",
        help="override the color of one series",
    )
    plot.add_argument(
        "--show-runs", action="store_true",
        help="overlay the per-run curves behind the mean",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(
        series=[split_pair(s, "--series") for s in args.series],
        out=args.out,
        title=args.title,
        colors=dict(split_pair(c, "--color") for c in args.color),
        show_runs=args.show_runs,
    )
    try:
        render(spec)
    except (SchemaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
