"""render_figs <kind> --csv PATH [--csv2 PATH] --out PATH [--ylim LO HI]."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, FigureSpec, RenderError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render_figs",
        description="Render paper-style figures from softwall CSV outputs",
    )
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--csv", required=True,
                        help="input CSV (file, glob, or directory for k2 sweeps)")
    parser.add_argument("--csv2", default=None,
                        help="companion file (gap catalog JSON for band shading)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--ylim", type=float, nargs=2, default=None)
    parser.add_argument("--xlim", type=float, nargs=2, default=None)
    args = parser.parse_args(argv)
    spec = FigureSpec(
        kind=args.kind,
        csv=args.csv,
        out=args.out,
        csv2=args.csv2,
        ylim=tuple(args.ylim) if args.ylim else None,
        xlim=tuple(args.xlim) if args.xlim else None,
    )
    try:
        render(spec)
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
