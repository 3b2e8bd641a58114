#!/usr/bin/env python3
"""Run one or more figure presets and write their CSV files.

    python scripts/run_figure.py --figure 2 --figure 4 --scale desk --out results/
    python scripts/run_figure.py --all --scale paper --workers 8 --out results/

Each figure gets its own subdirectory holding the materialized config, the
threshold table and the Pd (or Pfa-sweep) table.
"""

import argparse
import sys
import time
from pathlib import Path

from adaptive_subspace import cli


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--figure", action="append", default=[], choices=cli.FIGURES)
    parser.add_argument("--all", action="store_true", help="run every supported figure")
    parser.add_argument("--scale", choices=tuple(cli.SCALES), default="desk")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)

    figures = list(cli.FIGURES) if args.all else args.figure
    if not figures:
        parser.error("give --figure at least once, or --all")
    status = 0
    for fig in figures:
        start = time.perf_counter()
        code = cli.cmd_figure(fig, args.scale, Path(args.out) / f"fig{fig}", args.seed, args.workers)
        print(f"figure {fig}: exit {code}, {time.perf_counter() - start:.0f}s", file=sys.stderr)
        status = max(status, code)
    return status


if __name__ == "__main__":
    sys.exit(main())
