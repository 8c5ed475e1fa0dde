#!/usr/bin/env python3
"""Two-spike benchmark of the angle and shrinkage estimators.

Default grid is gamma in {1, 20, 100} x n in {100, 200} at 200
replicates; --full adds gamma=500 (p up to 100000, slow).
"""

import argparse
import sys
from pathlib import Path

from spikepca import run_table12


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--replicates", type=int, default=200)
    parser.add_argument("--full", action="store_true",
                        help="include the gamma=500 column")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker threads (default: SPCA_THREADS or 1)")
    parser.add_argument("--out", default="table12_report.csv")
    args = parser.parse_args()

    gammas = (1.0, 20.0, 100.0, 500.0) if args.full else (1.0, 20.0, 100.0)
    report = run_table12(
        gammas=gammas,
        ns=(100, 200),
        replicates=args.replicates,
        seed=args.seed,
        workers=args.workers,
    )
    Path(args.out).write_text(report.to_csv())
    sys.stderr.write(report.summary())
    sys.stderr.write(f"report -> {args.out}\n")


if __name__ == "__main__":
    main()
