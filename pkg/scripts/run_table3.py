#!/usr/bin/env python3
"""PC-regression benchmark: test MSE with and without score adjustment.

Default cells are (n, g) = (100, 300) and (200, 300) at 100 replicates;
--full runs the whole 8-configuration grid.
"""

import argparse
import sys
from pathlib import Path

from spikepca import run_table3

FULL_GRID = tuple(
    (n, g) for n in (100, 200) for g in (150, 300, 500, 1000)
)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--replicates", type=int, default=100)
    parser.add_argument("--full", action="store_true",
                        help="run all eight (n, g) configurations")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker threads (default: SPCA_THREADS or 1)")
    parser.add_argument("--out", default="table3_report.csv")
    args = parser.parse_args()

    cells = FULL_GRID if args.full else ((100, 300), (200, 300))
    report = run_table3(
        cells=cells,
        replicates=args.replicates,
        seed=args.seed,
        workers=args.workers,
    )
    Path(args.out).write_text(report.to_csv())
    sys.stderr.write(report.summary())
    sys.stderr.write(f"report -> {args.out}\n")


if __name__ == "__main__":
    main()
