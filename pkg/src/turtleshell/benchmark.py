"""Replication harness for the simulation frequency tables and the dataset ARI table."""

from __future__ import annotations

import csv
import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import gmm_posterior, select_k_both
from .data import BENCHMARKS, GENERATORS, find_benchmark, load_benchmark, replicate_seed
from .initialization import InitConfig
from .metrics import ari
from .selection import FitConfig, FitResult, fit

log = logging.getLogger(__name__)

K_COLUMNS = tuple(range(2, 10))
SIM_FAMILIES = ("cross", "mixg", "outlier")
DEFAULT_KNN = (15, 25, 45)


def fit_over_knn(X, ks=DEFAULT_KNN, cfg: FitConfig | None = None):
    """Fit once per kNN size (skipping k >= N/2) and keep the best-ASW result.

    Returns ``(best, {k: FitResult})``.
    """
    cfg = FitConfig() if cfg is None else cfg
    N = np.asarray(X).shape[0]
    usable = [k for k in ks if k < N / 2] or [min(ks)]
    results = {}
    for k in usable:
        results[k] = fit(X, replace(cfg, init=replace(cfg.init, k=k)))
    best = max(results.values(), key=lambda r: r.asw)
    return best, results


@dataclass
class Replicate:
    replicate: int
    turtle_K: int
    turtle_ari: float
    bic_K: int
    icl_K: int
    bic_ari: float
    icl_ari: float
    result: FitResult | None = field(default=None, repr=False)


def run_replicate(family: str, replicate: int, seed: int = 0, knn: int = 25,
                  baselines: bool = True, cfg: FitConfig | None = None) -> Replicate:
    ds = GENERATORS[family](replicate_seed(seed, replicate))
    cfg = FitConfig(init=InitConfig(k=knn)) if cfg is None else cfg
    res = fit(ds.X, cfg)
    bic_K = icl_K = -1
    bic_ari = icl_ari = float("nan")
    if baselines:
        Z = ds.standardized().X
        sel = select_k_both(Z, K_COLUMNS, seed=replicate)
        bic_K, icl_K = sel["bic"][0], sel["icl"][0]
        bic_ari = ari(np.argmax(gmm_posterior(Z, sel["bic"][1]), axis=1), ds.true_labels)
        icl_ari = ari(np.argmax(gmm_posterior(Z, sel["icl"][1]), axis=1), ds.true_labels)
    return Replicate(replicate, res.K, ari(res.labels, ds.true_labels), bic_K, icl_K,
                     bic_ari, icl_ari, res)


def frequency_table(reps: list[Replicate]) -> dict[str, Counter]:
    return {
        "turtleshell": Counter(r.turtle_K for r in reps),
        "gmm_em_icl": Counter(r.icl_K for r in reps),
        "gmm_em_bic": Counter(r.bic_K for r in reps),
    }


def write_frequency_table(path, table: dict[str, Counter]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", *K_COLUMNS, "other"])
        for method, counts in table.items():
            other = sum(v for k, v in counts.items() if k not in K_COLUMNS)
            w.writerow([method, *(counts.get(k, 0) for k in K_COLUMNS), other])


def run_simulation_suite(replicates: int, seed: int, out_dir, families=SIM_FAMILIES) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tables = {}
    for family in families:
        reps = []
        for r in range(replicates):
            rep = run_replicate(family, r, seed)
            log.info("%s replicate %d: turtle K=%d (ARI %.3f), BIC K=%d, ICL K=%d",
                     family, r, rep.turtle_K, rep.turtle_ari, rep.bic_K, rep.icl_K)
            reps.append(rep)
        tables[family] = frequency_table(reps)
        write_frequency_table(out / f"{family}_frequencies.csv", tables[family])
        with open(out / f"{family}_replicates.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["replicate", "turtle_K", "turtle_ari", "bic_K", "bic_ari", "icl_K", "icl_ari"])
            for rep in reps:
                w.writerow([rep.replicate, rep.turtle_K, f"{rep.turtle_ari:.6f}", rep.bic_K,
                            f"{rep.bic_ari:.6f}", rep.icl_K, f"{rep.icl_ari:.6f}"])
    return tables


@dataclass
class DatasetRow:
    name: str
    turtle_ari: float
    turtle_K: int
    turtle_best_ari: float
    icl_ari: float
    icl_K: int
    bic_ari: float
    bic_K: int


def run_dataset(name: str, seed: int = 0, ks=DEFAULT_KNN) -> DatasetRow:
    ds = load_benchmark(name)
    cfg = FitConfig(init=InitConfig(seed=seed), seed=seed)
    best, per_k = fit_over_knn(ds.X, ks, cfg)
    best_ari = max(ari(r.labels, ds.true_labels) for r in per_k.values())
    sel = select_k_both(ds.X, K_COLUMNS, seed=seed)
    rows = {}
    for crit in ("bic", "icl"):
        K, f = sel[crit]
        rows[crit] = (ari(np.argmax(gmm_posterior(ds.X, f), axis=1), ds.true_labels), K)
    return DatasetRow(name, ari(best.labels, ds.true_labels), best.K, best_ari,
                      rows["icl"][0], rows["icl"][1], rows["bic"][0], rows["bic"][1])


def run_dataset_suite(seed: int, out_dir, names=BENCHMARKS) -> list[DatasetRow]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for name in names:
        if find_benchmark(name) is None:
            log.warning("dataset %s not available; skipped", name)
            continue
        row = run_dataset(name, seed)
        log.info("%s: turtle ARI %.2f (%d)", name, row.turtle_ari, row.turtle_K)
        rows.append(row)
    with open(out / "datasets_ari.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "turtle_ari", "turtle_K", "turtle_best_ari",
                    "icl_ari", "icl_K", "bic_ari", "bic_K"])
        for r in rows:
            w.writerow([r.name, f"{r.turtle_ari:.4f}", r.turtle_K, f"{r.turtle_best_ari:.4f}",
                        f"{r.icl_ari:.4f}", r.icl_K, f"{r.bic_ari:.4f}", r.bic_K])
    return rows
