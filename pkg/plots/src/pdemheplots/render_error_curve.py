"""Render a log-scale error curve from a harness series CSV (error.csv or
observer_error.csv), with an optional vertical marker at the engagement time.

Usage::

    pdemhe-error-curve --in out/error.csv --out error.png --mark 0.1
"""

import argparse
import json
import sys

from .figures import FigureSpec, render_error_curve


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--in", dest="csv_in", required=True,
                    help="series CSV with columns t,<value>")
    ap.add_argument("--out", required=True, help="output PNG path")
    ap.add_argument("--mark", type=float, default=None,
                    help="engagement time to mark with a vertical line")
    ap.add_argument("--title", default=None)
    ap.add_argument("--quiet", action="store_true")
    args = ap.parse_args(argv)
    spec = FigureSpec(out_path=args.out, mark=args.mark, title=args.title)
    report = render_error_curve(args.csv_in, spec)
    if not args.quiet:
        print(json.dumps(report, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
