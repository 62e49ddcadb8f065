"""Command line: metarisk-plot --kind <k> --in <csv> [--in <csv>...] --out <img> [--logx] [--logy]"""

from __future__ import annotations

import argparse
import sys

from .csvio import EmptyInputError, SchemaError
from .render import KINDS, PlotSpec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="metarisk-plot", description=__doc__)
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="inputs", action="append", required=True, metavar="CSV")
    parser.add_argument("--out", required=True, help="output image path (extension picks the format)")
    parser.add_argument("--logx", action="store_true")
    parser.add_argument("--logy", action="store_true")
    args = parser.parse_args(argv)
    try:
        spec = PlotSpec(
            inputs=tuple(args.inputs), kind=args.kind, out=args.out,
            logx=args.logx, logy=args.logy,
        )
        series = render(spec)
    except (SchemaError, EmptyInputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out} with {len(series)} series")
    return 0


if __name__ == "__main__":
    sys.exit(main())
