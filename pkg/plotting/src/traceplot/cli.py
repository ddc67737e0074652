"""Standalone entry point: plot <figure-spec-file>."""

from __future__ import annotations

import argparse
import sys

from traceplot.figspec import FigureSpecError, load_figure_spec
from traceplot.render import TraceSchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot", description="Render a convergence figure from trace CSVs.")
    parser.add_argument("spec", help="YAML figure specification")
    args = parser.parse_args(argv)
    try:
        out = render(load_figure_spec(args.spec))
    except (FigureSpecError, TraceSchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
