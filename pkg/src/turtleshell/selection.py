"""Fitting pipeline: warm start, tuning-parameter grid, small-cluster removal and merges."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .data import Standardizer
from .initialization import InitConfig, initialize, precision_cholesky
from .metrics import UndefinedMetric, compact_labels, silhouette
from .objective import (
    DataBox,
    Hyper,
    Model,
    objective_and_gradient,
    pack,
    param_bounds,
    posterior,
    unpack,
)
from .optimizer import Bounds, NumericalFailure, OptimizerConfig, maximize

log = logging.getLogger(__name__)

LAMBDA1_GRID = (0.0, 0.01, 0.1, 1.0)
LAMBDA2_GRID = (0.0, 0.1, 1.0, 10.0)
MAX_MERGE_CANDIDATES = 50
# "origin": every cell starts from the lambda = (0, 0) fit.
# "column": each lambda2 column gets its own lambda1 = 0 fit, which seeds the
# lambda1 > 0 cells of that column.
WARM_STARTS = ("origin", "column")


@dataclass
class FitConfig:
    init: InitConfig = field(default_factory=InitConfig)
    lambda1_grid: tuple = LAMBDA1_GRID
    lambda2_grid: tuple = LAMBDA2_GRID
    removal_threshold: float | None = None    # None: max(0.01, 10 / N)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    asw_subsample: int | None = None          # None: exact, or 5000 when N > 10000
    standardize: bool = True
    seed: int = 0
    n_jobs: int = 1
    warm_start: str = "column"                # see WARM_STARTS

    def __post_init__(self):
        if self.warm_start not in WARM_STARTS:
            raise ValueError(f"warm_start must be one of {WARM_STARTS}")
        if any(v < 0 for v in (*self.lambda1_grid, *self.lambda2_grid)):
            raise ValueError("tuning-parameter grids must be nonnegative")
        if self.removal_threshold is not None and not 0 < self.removal_threshold < 0.5:
            raise ValueError("removal threshold must lie in (0, 0.5)")

    def threshold_for(self, N: int) -> float:
        if self.removal_threshold is not None:
            return self.removal_threshold
        return max(0.01, 10.0 / N)

    def subsample_for(self, N: int) -> int | None:
        if self.asw_subsample is not None:
            return self.asw_subsample
        return 5000 if N > 10000 else None


@dataclass
class CellResult:
    hyper: Hyper
    model: Model | None
    asw: float
    trace: list
    history: list
    error: str | None = None


@dataclass
class FitResult:
    model: Model
    labels: np.ndarray
    responsibilities: np.ndarray
    asw: float
    hyper: Hyper
    objective_trace: list
    history: list
    standardizer: Standardizer
    cells: list = field(default_factory=list)
    initial_K: int = 0

    @property
    def K(self) -> int:
        return self.model.K


class FitError(RuntimeError):
    def __init__(self, message, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


# ---------------------------------------------------------------------------
# small helpers

def map_labels(P) -> np.ndarray:
    """Row-wise argmax; ties go to the lowest index."""
    return np.argmax(np.asarray(P), axis=1)


def map_shares(P) -> np.ndarray:
    P = np.asarray(P)
    return np.bincount(map_labels(P), minlength=P.shape[1]) / P.shape[0]


class _Scorer:
    """ASW of a model's MAP partition, with a fixed subsample seed."""

    def __init__(self, X, subsample, seed):
        self.X, self.subsample, self.seed = X, subsample, seed

    def labels_score(self, labels) -> float:
        try:
            return silhouette(self.X, labels, self.subsample, self.seed)
        except UndefinedMetric:
            return -np.inf

    def __call__(self, m: Model) -> float:
        return self.labels_score(map_labels(posterior(self.X, m)))


def refit(X, m: Model, h: Hyper, cfg: OptimizerConfig, box: DataBox | None = None):
    """Maximize the objective from ``m``; returns ``(model, objective values)``."""
    box = DataBox.from_data(X) if box is None else box
    K, D = m.K, m.D
    lo, hi = param_bounds(K, D, box)

    def fg(v):
        return objective_and_gradient(X, unpack(v, K, D), h)

    x, trace = maximize(None, None, pack(m), Bounds(lo, hi), cfg, fg=fg)
    return unpack(x, K, D), trace.values


def drop_cluster(m: Model, k: int) -> Model:
    keep = np.delete(np.arange(m.K), k)
    out = m.subset(keep)
    # renormalize the surviving logits
    out.pi = out.pi - (out.pi.max() + np.log(np.exp(out.pi - out.pi.max()).sum()))
    return out


def remove_small_clusters(X, m: Model, h: Hyper, threshold: float,
                          cfg: OptimizerConfig = OptimizerConfig(), box=None,
                          trace=None, history=None) -> Model:
    """Drop the smallest under-threshold cluster and re-estimate, until none is left."""
    trace = [] if trace is None else trace
    history = [] if history is None else history
    while m.K > 1:
        shares = map_shares(posterior(X, m))
        small = np.flatnonzero(shares < threshold)
        if small.size == 0:
            break
        k = small[np.argmin(shares[small])]
        before = m.K
        m, values = refit(X, drop_cluster(m, k), h, cfg, box)
        trace.extend(("removal", v) for v in values)
        history.append({"event": "remove", "cluster": int(k), "share": float(shares[k]),
                        "K_before": before, "K_after": m.K})
    return m


# ---------------------------------------------------------------------------
# merging

def cluster_entropy(P, k: int) -> float:
    """sum_i p_ik log p_ik (0 log 0 = 0)."""
    p = np.asarray(P)[:, k]
    nz = p > 0
    return float(np.sum(p[nz] * np.log(p[nz])))


def uncertainty_order(P) -> np.ndarray:
    """Cluster indices, most uncertain first.

    Uncertainty is the mean of p log p over the cluster's MAP members; clusters
    without members come first.
    """
    P = np.asarray(P)
    lab = map_labels(P)
    stat = np.empty(P.shape[1])
    for k in range(P.shape[1]):
        p = P[lab == k, k]
        stat[k] = -np.inf if p.size == 0 else np.mean(p * np.log(p))
    return np.argsort(stat, kind="stable")


def merge_similarity(P, i: int, k: int) -> float:
    P = np.asarray(P)
    a, b = P[:, i], P[:, k]
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b / (na * nb))


def most_similar(P, i: int) -> int:
    sims = [(merge_similarity(P, i, k), -k) for k in range(P.shape[1]) if k != i]
    return -max(sims)[1]


def merge_params(m: Model, i: int, k: int) -> Model:
    """Moment-matched merge of clusters ``i`` and ``k``; the result sits at ``i``'s slot."""
    if i == k:
        raise ValueError("cannot merge a cluster with itself")
    tau = m.tau
    ti, tk = tau[i], tau[k]
    t = ti + tk
    cov = m.covariance
    mu = (ti * m.mu[i] + tk * m.mu[k]) / t
    second = (ti * (cov[i] + np.outer(m.mu[i], m.mu[i]))
              + tk * (cov[k] + np.outer(m.mu[k], m.mu[k]))) / t
    sigma = second - np.outer(mu, mu)
    out = m.copy()
    out.mu[i] = mu
    out.L[i] = precision_cholesky(sigma)
    out.omega[i] = (ti * m.omega[i] + tk * m.omega[k]) / t
    a = (ti * m.a[i] + tk * m.a[k]) / t
    b = (ti * m.b[i] + tk * m.b[k]) / t
    out.a[i], out.w[i] = a, b - a
    new_tau = tau.copy()
    new_tau[i] = t
    out.pi = np.log(new_tau)
    return out.subset(np.delete(np.arange(m.K), k))


def merged_covariance(m: Model, i: int, k: int) -> np.ndarray:
    """Covariance the merge formula targets (before the Cholesky round trip)."""
    tau = m.tau
    t = tau[i] + tau[k]
    cov = m.covariance
    mu = (tau[i] * m.mu[i] + tau[k] * m.mu[k]) / t
    return (tau[i] * (cov[i] + np.outer(m.mu[i], m.mu[i]))
            + tau[k] * (cov[k] + np.outer(m.mu[k], m.mu[k]))) / t - np.outer(mu, mu)


def merge_step(X, m: Model, h: Hyper, cfg: OptimizerConfig = OptimizerConfig(),
               scorer=None, box=None, budget=None, trace=None, history=None):
    """Try merges in uncertainty order; accept the first that raises ASW and re-estimate.

    Returns ``(model, accepted)``. ``budget`` is a one-element list holding the
    remaining number of candidate evaluations.
    """
    trace = [] if trace is None else trace
    history = [] if history is None else history
    budget = [MAX_MERGE_CANDIDATES] if budget is None else budget
    scorer = _Scorer(X, None, 0) if scorer is None else scorer
    if m.K < 2:
        return m, False
    P = posterior(X, m)
    current = scorer.labels_score(map_labels(P))
    for c in uncertainty_order(P):
        if budget[0] <= 0:
            break
        budget[0] -= 1
        partner = most_similar(P, c)
        merged = merge_params(m, c, partner)
        labels = map_labels(posterior(X, merged))
        if np.unique(labels).size < 2:
            continue
        score = scorer.labels_score(labels)
        if score > current:
            before = m.K
            trace.append(("merge", _objective(X, merged, h)))
            refitted, values = refit(X, merged, h, cfg, box)
            trace.extend(("merge", v) for v in values)
            history.append({"event": "merge", "clusters": [int(c), int(partner)],
                            "K_before": before, "K_after": merged.K,
                            "asw_before": float(current), "asw_after": float(score)})
            return refitted, True
    return m, False


def _objective(X, m, h):
    return objective_and_gradient(X, m, h)[0]


def reduce_order(X, m: Model, h: Hyper, threshold: float, cfg: OptimizerConfig,
                 scorer, box=None, trace=None, history=None) -> Model:
    """Alternate small-cluster removal and merge passes until no merge is accepted."""
    budget = [MAX_MERGE_CANDIDATES]
    merges_left = m.K - 1
    while True:
        m = remove_small_clusters(X, m, h, threshold, cfg, box, trace, history)
        if m.K < 2 or merges_left <= 0 or budget[0] <= 0:
            return m
        m, accepted = merge_step(X, m, h, cfg, scorer, box, budget, trace, history)
        if not accepted:
            return m
        merges_left -= 1


# ---------------------------------------------------------------------------
# full fit

def _run_cell(X, start: Model, h: Hyper, threshold, cfg: FitConfig, scorer, box) -> CellResult:
    trace, history = [], []
    phase = f"fit l1={h.lambda1:g} l2={h.lambda2:g}"
    try:
        m, values = refit(X, start, h, cfg.optimizer, box)
        trace.extend((phase, v) for v in values)
        m = reduce_order(X, m, h, threshold, cfg.optimizer, scorer, box, trace, history)
    except (NumericalFailure, np.linalg.LinAlgError) as exc:
        log.warning("cell %s failed: %s", h, exc)
        return CellResult(h, None, -np.inf, trace, history, error=str(exc))
    return CellResult(h, m, scorer(m), trace, history)


def fit(X, cfg: FitConfig | None = None) -> FitResult:
    cfg = FitConfig() if cfg is None else cfg
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or not np.all(np.isfinite(X)):
        raise ValueError("X must be a finite (N, D) array")
    N, D = X.shape
    if N < 2 * D:
        raise ValueError(f"need N >= 2D observations, got N={N}, D={D}")
    st = Standardizer.fit(X) if cfg.standardize else Standardizer.identity(D)
    Xs = st.transform(X)
    box = DataBox.from_data(Xs)
    threshold = cfg.threshold_for(N)
    scorer = _Scorer(Xs, cfg.subsample_for(N), cfg.seed)

    m0 = initialize(Xs, cfg.init)
    log.info("initial model: K=%d", m0.K)
    grid = [Hyper(l1, l2) for l1, l2 in itertools.product(cfg.lambda1_grid, cfg.lambda2_grid)]
    if cfg.warm_start == "origin":
        roots = [Hyper(0.0, 0.0)]
    else:
        roots = [Hyper(0.0, l2) for l2 in dict.fromkeys((0.0, *cfg.lambda2_grid))]
    warm = {}
    for h in roots:
        warm[h] = _run_cell(Xs, m0, h, threshold, cfg, scorer, box)
        if warm[h].model is None:
            raise FitError(f"the warm-start fit at {h} failed", [(h, warm[h].error)])

    def seed_for(h):
        return warm[roots[0] if cfg.warm_start == "origin" else Hyper(0.0, h.lambda2)]

    todo = [h for h in grid if h not in warm]
    if cfg.n_jobs != 1 and todo:
        from joblib import Parallel, delayed
        done = Parallel(n_jobs=cfg.n_jobs)(
            delayed(_run_cell)(Xs, seed_for(h).model, h, threshold, cfg, scorer, box)
            for h in todo)
    else:
        done = [_run_cell(Xs, seed_for(h).model, h, threshold, cfg, scorer, box) for h in todo]
    by_hyper = {**warm, **dict(zip(todo, done))}
    cells = [by_hyper[h] for h in grid] or list(warm.values())

    ok = [c for c in cells if c.model is not None]
    if not ok:
        raise FitError("every grid cell failed", [(c.hyper, c.error) for c in cells])
    best = ok[0]
    for c in ok[1:]:
        if c.asw > best.asw:
            best = c
    for c in cells:
        log.info("cell %s: K=%s ASW=%.4f", c.hyper, None if c.model is None else c.model.K, c.asw)

    P = posterior(Xs, best.model)
    labels = map_labels(P)
    root = seed_for(best.hyper)
    trace = list(root.trace) + ([] if best is root else list(best.trace))
    history = list(root.history) + ([] if best is root else list(best.history))
    return FitResult(
        model=best.model,
        labels=labels,
        responsibilities=P,
        asw=best.asw,
        hyper=best.hyper,
        objective_trace=trace,
        history=history,
        standardizer=st,
        cells=cells,
        initial_K=m0.K,
    )
