"""Command-line interface: fit, simulate, evaluate, benchmark."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .benchmark import run_dataset_suite, run_simulation_suite, fit_over_knn
from .data import ParseError, load_csv, simulate, write_csv
from .export import write_fit_outputs
from .initialization import SCHEMES, InitConfig
from .metrics import ari, compact_labels
from .selection import LAMBDA1_GRID, LAMBDA2_GRID, FitConfig, FitError


def _floats(text: str) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _ints(text: str) -> tuple:
    try:
        vals = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("kNN sizes must be positive integers")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="turtleshell", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="cluster a CSV file")
    f.add_argument("--input", required=True, help="comma-separated numeric data")
    f.add_argument("--label-col", default=None,
                   help="column (0-based index or header name) to drop from the features")
    f.add_argument("--knn", type=_ints, default=(25,),
                   help="kNN size, or a list such as 15,25,45 (best ASW kept)")
    f.add_argument("--scheme", choices=SCHEMES, default="graph")
    f.add_argument("--lambda1", type=_floats, default=LAMBDA1_GRID)
    f.add_argument("--lambda2", type=_floats, default=LAMBDA2_GRID)
    f.add_argument("--threshold", type=float, default=None,
                   help="small-cluster share threshold (default max(0.01, 10/N))")
    f.add_argument("--nstarts", type=int, default=10)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--no-standardize", action="store_true")
    f.add_argument("--subsample", type=int, default=None,
                   help="ASW subsample size (default: exact up to N=10000)")
    f.add_argument("--jobs", type=int, default=1, help="parallel grid cells")
    f.add_argument("--out", required=True, help="output directory")

    s = sub.add_parser("simulate", help="write a simulated data set")
    s.add_argument("--family", required=True, choices=("gu6", "cross", "mixg", "outlier", "fig1"))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    e = sub.add_parser("evaluate", help="ARI between two label files")
    e.add_argument("--pred", required=True, help="CSV with a label column (e.g. labels.csv)")
    e.add_argument("--truth", required=True, help="CSV with a label column")

    b = sub.add_parser("benchmark", help="replication tables")
    b.add_argument("--suite", required=True, choices=("sims", "datasets"))
    b.add_argument("--replicates", type=int, default=25)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True)
    return p


def _label_column(path):
    ds = load_csv(path, has_header=True, label_column="label", standardize=False)
    return ds.true_labels


def cmd_fit(args) -> int:
    label_col = args.label_col
    ds = load_csv(args.input, label_column=label_col, standardize=False)
    cfg = FitConfig(
        init=InitConfig(scheme=args.scheme, k=args.knn[0], n_starts=args.nstarts, seed=args.seed),
        lambda1_grid=args.lambda1,
        lambda2_grid=args.lambda2,
        removal_threshold=args.threshold,
        asw_subsample=args.subsample,
        standardize=not args.no_standardize,
        seed=args.seed,
        n_jobs=args.jobs,
    )
    if len(args.knn) > 1:
        res, per_k = fit_over_knn(ds.X, args.knn, cfg)
        knn = next(k for k, r in per_k.items() if r is res)
    else:
        res = fit_over_knn(ds.X, args.knn, cfg)[0]
        knn = args.knn[0]
    write_fit_outputs(res, args.out, extra={"knn": knn, "scheme": args.scheme, "seed": args.seed})
    print(f"K={res.K} asw={res.asw:.6f} lambda1={res.hyper.lambda1:g} "
          f"lambda2={res.hyper.lambda2:g} knn={knn}")
    return 0


def cmd_simulate(args) -> int:
    ds = simulate(args.family, args.seed)
    write_csv(args.out, ds.X, ds.true_labels)
    return 0


def cmd_evaluate(args) -> int:
    pred = _label_column(args.pred)
    truth = _label_column(args.truth)
    if pred.shape != truth.shape:
        raise ParseError(f"label files differ in length: {pred.size} vs {truth.size}")
    k = int(np.unique(compact_labels(pred)).size)
    print(f"ari={float(ari(pred, truth))!r} k={k}")
    return 0


def cmd_benchmark(args) -> int:
    if args.suite == "sims":
        run_simulation_suite(args.replicates, args.seed, args.out)
    else:
        run_dataset_suite(args.seed, args.out)
    return 0


COMMANDS = {"fit": cmd_fit, "simulate": cmd_simulate, "evaluate": cmd_evaluate,
            "benchmark": cmd_benchmark}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (ParseError, FileNotFoundError, ValueError, FitError) as exc:
        print(f"turtleshell {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
