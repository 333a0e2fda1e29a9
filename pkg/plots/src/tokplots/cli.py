"""Command-line wrapper: render one figure per requested kind."""

from __future__ import annotations

import argparse
import sys

from .plots import KINDS, PlotError, PlotSpec, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="tokscale-plots", description="Render study figures from CSV outputs."
    )
    parser.add_argument("csv", help="metrics.csv or an overlap-matrix CSV")
    parser.add_argument("--kind", choices=KINDS, required=True, action="append",
                        dest="kinds", help="figure kind (repeatable)")
    parser.add_argument("--output-prefix", "-o", required=True,
                        help="output path prefix; '<prefix>_<kind>.png' per kind")
    parser.add_argument("--algorithm", help="restrict to one algorithm")
    parser.add_argument("--vocab-size", type=int, help="restrict to one vocabulary size")
    args = parser.parse_args(argv)

    try:
        for kind in args.kinds:
            spec = PlotSpec(
                kind=kind,
                csv_path=args.csv,
                output_path=f"{args.output_prefix}_{kind}.png",
                algorithm=args.algorithm,
                vocab_size=args.vocab_size,
            )
            print(render(spec))
    except (PlotError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
