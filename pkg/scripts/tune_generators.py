#!/usr/bin/env python3
"""Tuning loop behind the committed generator constants.

For a candidate setting of a family's module-level constants, counts the K
chosen by GMM-EM with BIC and ICL over seeded replicates. Example:

    python scripts/tune_generators.py fig1 --set FIG1_MEANS="[[0,0],[2.4,0],[6,5],[6,-5]]" \
        --set FIG1_N=600 --replicates 16
"""

import argparse
import json
from collections import Counter

import numpy as np

import turtleshell.data as data
from turtleshell.baselines import select_k_both
from turtleshell.benchmark import K_COLUMNS


def parse_setting(text):
    name, _, value = text.partition("=")
    if not hasattr(data, name):
        raise SystemExit(f"unknown generator constant {name!r}")
    current = getattr(data, name)
    parsed = json.loads(value)
    return name, np.asarray(parsed, dtype=float) if isinstance(current, np.ndarray) else parsed


def main():
    p = argparse.ArgumentParser(description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("family", choices=sorted(data.GENERATORS))
    p.add_argument("--set", action="append", default=[], metavar="NAME=JSON")
    p.add_argument("--replicates", type=int, default=12)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    for name, value in map(parse_setting, args.set):
        setattr(data, name, value)
    bic_k, icl_k = Counter(), Counter()
    for r in range(args.replicates):
        ds = data.GENERATORS[args.family](data.replicate_seed(args.seed, r)).standardized()
        sel = select_k_both(ds.X, K_COLUMNS, n_restarts=args.restarts, seed=r)
        bic_k[sel["bic"][0]] += 1
        icl_k[sel["icl"][0]] += 1
        print(f"replicate {r}: BIC K={sel['bic'][0]} ICL K={sel['icl'][0]}", flush=True)
    print("BIC", dict(sorted(bic_k.items())))
    print("ICL", dict(sorted(icl_k.items())))


if __name__ == "__main__":
    main()
