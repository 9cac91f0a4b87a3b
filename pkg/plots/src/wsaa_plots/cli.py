"""wsaa-plots: figures from wsaa experiment outputs.

Usage: wsaa-plots <kind> --records records.csv --summary summary.json --out fig.svg

Kinds: bands, rmse_loglog, histogram_overlay. Exit codes: 0 success,
2 bad inputs (missing files, schema mismatch, empty records).
"""

from __future__ import annotations

import argparse
import sys

from .io import NoDataError, SchemaVersionError
from .render import FIGURE_KINDS, FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wsaa-plots", description=__doc__)
    parser.add_argument("kind", choices=FIGURE_KINDS)
    parser.add_argument("--records", required=True, help="records.csv from `wsaa experiment`")
    parser.add_argument("--summary", required=True, help="summary.json from `wsaa experiment`")
    parser.add_argument("--out", required=True, help="output image path (.svg or .png)")
    parser.add_argument("--title", default=None)
    parser.add_argument("--grid-value", type=float, default=None,
                        help="histogram_overlay: grid point to plot (default: largest)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(records=args.records, summary=args.summary, kind=args.kind,
                      out=args.out, title=args.title, grid_value=args.grid_value)
    try:
        out = render(spec)
    except (NoDataError, SchemaVersionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
