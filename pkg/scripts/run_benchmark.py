#!/usr/bin/env python3
"""ARI table on the benchmark datasets found in the bundle or $TURTLESHELL_DATA."""

import argparse
import logging

from turtleshell.benchmark import run_dataset_suite
from turtleshell.data import BENCHMARKS


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--datasets", nargs="+", default=list(BENCHMARKS), choices=BENCHMARKS)
    p.add_argument("--out", default="results/datasets")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    rows = run_dataset_suite(args.seed, args.out, args.datasets)
    print(f"{'dataset':<12} {'turtle':>12} {'ICL':>12} {'BIC':>12}")
    for r in rows:
        print(f"{r.name:<12} {r.turtle_ari:8.2f} ({r.turtle_K}) {r.icl_ari:8.2f} ({r.icl_K}) "
              f"{r.bic_ari:8.2f} ({r.bic_K})")


if __name__ == "__main__":
    main()
