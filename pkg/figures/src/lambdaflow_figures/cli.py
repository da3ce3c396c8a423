"""Figure-rendering CLI.

Usage:
    lambdaflow-figures render --kind flow-timeseries --in run.csv \
        [--intervals run.intervals.csv] --out run.png
    lambdaflow-figures render --kind duration-heatmap --in map.csv \
        [--diff-axes] --out map.png
    lambdaflow-figures render --kind diode-overlay \
        --in fwd.csv --in rev.csv --out diode.png

When --out is omitted the image lands next to the first input with a
.png suffix. Exit codes: 0 success, 1 unusable input, 2 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .readers import FigureInputError
from .render import (
    KINDS,
    render_diode_overlay,
    render_duration_heatmap,
    render_flow_timeseries,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lambdaflow-figures")
    sub = parser.add_subparsers(dest="command", required=True)
    render = sub.add_parser("render", help="render one figure from CSV input")
    render.add_argument("--kind", choices=KINDS, required=True)
    render.add_argument(
        "--in",
        dest="inputs",
        action="append",
        required=True,
        type=Path,
        help="input CSV (repeat for diode-overlay: forward then reverse)",
    )
    render.add_argument("--intervals", type=Path, help="interval sidecar to shade")
    render.add_argument(
        "--diff-axes",
        action="store_true",
        help="pivot heatmaps on (gamma2, gamma1-gamma2)",
    )
    render.add_argument("--out", type=Path, help="output image path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = args.out or args.inputs[0].with_suffix(".png")
    try:
        if args.kind == "flow-timeseries":
            result = render_flow_timeseries(args.inputs[0], out, args.intervals)
            print(f"wrote {result.path} with {result.n_shaded} shaded windows")
        elif args.kind == "duration-heatmap":
            result = render_duration_heatmap(args.inputs[0], out, args.diff_axes)
            print(f"wrote {result.path} ({result.n_zero_cells} zero-duration cells)")
        else:
            if len(args.inputs) != 2:
                print("diode-overlay needs two --in paths", file=sys.stderr)
                return 1
            result = render_diode_overlay(args.inputs[0], args.inputs[1], out)
            print(f"wrote {result.path}")
    except FigureInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
