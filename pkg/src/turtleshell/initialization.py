"""Starting models: kNN graph + Louvain communities, Latin hypercube nodes, or k-means."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist
from scipy.stats import qmc
from sklearn.cluster import KMeans

from .densities import DIAG_FLOOR
from .metrics import UndefinedMetric, silhouette
from .objective import DataBox, Model, posterior

log = logging.getLogger(__name__)

SCHEMES = ("graph", "lhs", "kmeans")


@dataclass(frozen=True)
class InitConfig:
    scheme: str = "graph"
    k: int = 25
    n_starts: int = 10
    omega0: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown init scheme {self.scheme!r}")
        if self.k < 1 or self.n_starts < 1:
            raise ValueError("k and n_starts must be >= 1")


@dataclass(frozen=True)
class SparseGraph:
    n: int
    edges: np.ndarray      # (E, 2) with i < j
    weights: np.ndarray    # (E,)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_weighted_edges_from(
            (int(i), int(j), float(w)) for (i, j), w in zip(self.edges, self.weights))
        return g

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.reshape(-1), minlength=self.n)


# ---------------------------------------------------------------------------
# kNN graph

_BRUTE_FORCE_MAX_N = 20000


def knn_indices(X, k: int, block: int = 512) -> np.ndarray:
    """(N, k) neighbour indices, self excluded; distance ties go to the smaller index."""
    X = np.asarray(X, dtype=float)
    N = X.shape[0]
    if not 1 <= k < N:
        raise ValueError(f"need 1 <= k < N, got k={k}, N={N}")
    if N > _BRUTE_FORCE_MAX_N:
        # tie order is not guaranteed by the tree query; acceptable at this scale
        _, idx = cKDTree(X).query(X, k=k + 1)
        out = np.empty((N, k), dtype=int)
        for i in range(N):
            row = idx[i][idx[i] != i]
            out[i] = row[:k]
        return out
    out = np.empty((N, k), dtype=int)
    for start in range(0, N, block):
        r = np.arange(start, min(start + block, N))
        d2 = cdist(X[r], X, "sqeuclidean")
        d2[np.arange(r.size), r] = np.inf
        out[r] = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return out


def knn_graph(X, k: int) -> SparseGraph:
    """Symmetric kNN graph: i ~ j when either is among the other's k nearest."""
    nbr = knn_indices(X, k)
    N = nbr.shape[0]
    i = np.repeat(np.arange(N), nbr.shape[1])
    j = nbr.reshape(-1)
    pairs = np.unique(np.stack([np.minimum(i, j), np.maximum(i, j)], axis=1), axis=0)
    return SparseGraph(N, pairs, np.ones(len(pairs)))


# ---------------------------------------------------------------------------
# Louvain

def modularity(g: SparseGraph, labels) -> float:
    """Newman modularity at resolution 1."""
    labels = np.asarray(labels)
    m = g.weights.sum()
    if m == 0:
        return 0.0
    i, j = g.edges[:, 0], g.edges[:, 1]
    inside = g.weights[labels[i] == labels[j]].sum()
    deg = np.zeros(g.n)
    np.add.at(deg, i, g.weights)
    np.add.at(deg, j, g.weights)
    comm_deg = np.bincount(labels, weights=deg)
    return float(inside / m - np.sum((comm_deg / (2 * m)) ** 2))


def louvain_levels(g: SparseGraph, seed) -> list[np.ndarray]:
    """Label vectors after each Louvain pass, coarsest last."""
    if g.n == 0:
        raise ValueError("empty graph")
    rng = np.random.default_rng(seed)
    nx_seed = int(rng.integers(2**31 - 1))
    levels = []
    for part in nx.community.louvain_partitions(g.to_networkx(), weight="weight",
                                                resolution=1.0, seed=nx_seed):
        labels = np.empty(g.n, dtype=int)
        # order communities by their smallest member for stable labels
        for c, members in enumerate(sorted(part, key=min)):
            labels[list(members)] = c
        levels.append(labels)
    if not levels:
        levels.append(np.arange(g.n))
    return levels


def louvain(g: SparseGraph, seed=0) -> np.ndarray:
    return louvain_levels(g, seed)[-1]


# ---------------------------------------------------------------------------
# turning a partition into model parameters

def _cov(X) -> np.ndarray:
    return np.atleast_2d(np.cov(X.T, bias=False))


def precision_cholesky(cov) -> np.ndarray:
    """Lower L with L L^T = inv(cov); jitters the diagonal if cov is not PD."""
    cov = 0.5 * (cov + cov.T)
    D = cov.shape[0]
    jitter = 0.0
    scale = max(np.trace(cov) / D, 1e-12)
    for _ in range(12):
        try:
            C = np.linalg.cholesky(cov + jitter * np.eye(D))
            prec = np.linalg.inv(C).T @ np.linalg.inv(C)
            L = np.linalg.cholesky(0.5 * (prec + prec.T))
            idx = np.arange(D)
            L[idx, idx] = np.maximum(L[idx, idx], DIAG_FLOOR)
            return L
        except np.linalg.LinAlgError:
            jitter = 1e-8 * scale if jitter == 0.0 else jitter * 10.0
    raise np.linalg.LinAlgError("covariance could not be made positive definite")


def random_box(mu, sd, rng, box: DataBox):
    """Box with per-dimension width in [0.5, 1.5] x sd containing mu with a 10% margin."""
    lo_w = box.width_floor
    sd = np.maximum(sd, 10 * lo_w)
    w = np.clip(sd * rng.uniform(0.5, 1.5, size=sd.size), lo_w, 1.2 * box.range)
    # mu must sit in [a + 0.1 w, a + 0.9 w]
    a = mu - w * rng.uniform(0.1, 0.9, size=sd.size)
    a = np.clip(a, box.lo - 0.1 * box.range, box.hi + 0.1 * box.range)
    return a, w


def model_from_partition(X, labels, centers, alpha: float, rng, omega0: float = 0.7,
                         box: DataBox | None = None) -> Model:
    """Build the starting model of one start from a hard partition.

    ``centers`` gives the Gaussian means (community means for the graph scheme).
    Covariances blend the global and per-group covariance with weight ``alpha``.
    """
    X = np.asarray(X, dtype=float)
    box = DataBox.from_data(X) if box is None else box
    K = centers.shape[0]
    cov_all = _cov(X)
    sd_all = np.sqrt(np.diag(cov_all))
    Ls, As, Ws = [], [], []
    for j in range(K):
        Xj = X[labels == j]
        if Xj.shape[0] < 2:
            cov_j, sd_j = cov_all, sd_all
        else:
            cov_j = _cov(Xj)
            sd_j = np.sqrt(np.diag(cov_j))
        Ls.append(precision_cholesky((1 - alpha) * cov_all + alpha * cov_j))
        a, w = random_box(centers[j], sd_j, rng, box)
        As.append(a)
        Ws.append(w)
    return Model(
        pi=np.full(K, np.log(1.0 / K)),
        omega=np.full(K, omega0),
        mu=np.array(centers, dtype=float),
        L=np.stack(Ls),
        a=np.stack(As),
        w=np.stack(Ws),
    )


def _group_means(X, labels, K):
    counts = np.bincount(labels, minlength=K)
    sums = np.zeros((K, X.shape[1]))
    np.add.at(sums, labels, X)
    return sums / counts[:, None]


def _nearest(X, centers):
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


def _start_score(X, m: Model) -> float:
    labels = np.argmax(posterior(X, m), axis=1)
    try:
        return silhouette(X, labels)
    except UndefinedMetric:
        return -np.inf


def _select(X, starts):
    best, best_score = None, -np.inf
    for i, m in enumerate(starts):
        score = _start_score(X, m)
        log.debug("start %d: K=%d ASW=%.4f", i, m.K, score)
        if best is None or score > best_score:
            best, best_score = m, score
    return best


def graph_init(X, cfg: InitConfig, graph: SparseGraph | None = None) -> Model:
    X = np.asarray(X, dtype=float)
    g = knn_graph(X, cfg.k) if graph is None else graph
    box = DataBox.from_data(X)
    starts = []
    for i in range(1, cfg.n_starts + 1):
        rng = np.random.default_rng([cfg.seed, i])
        labels = louvain(g, seed=[cfg.seed, i])
        K = labels.max() + 1
        centers = _group_means(X, labels, K)
        starts.append(model_from_partition(X, labels, centers, i / cfg.n_starts, rng,
                                           cfg.omega0, box))
    return _select(X, starts)


def lhs_init(X, cfg: InitConfig) -> Model:
    X = np.asarray(X, dtype=float)
    box = DataBox.from_data(X)
    starts = []
    for i in range(1, cfg.n_starts + 1):
        rng = np.random.default_rng([cfg.seed, i])
        sampler = qmc.LatinHypercube(d=X.shape[1], seed=rng)
        nodes = qmc.scale(sampler.random(cfg.k), box.lo, box.lo + box.range)
        labels = _nearest(X, nodes)
        starts.append(model_from_partition(X, labels, nodes, i / cfg.n_starts, rng,
                                           cfg.omega0, box))
    return _select(X, starts)


def kmeans_init(X, cfg: InitConfig) -> Model:
    X = np.asarray(X, dtype=float)
    box = DataBox.from_data(X)
    starts = []
    for i in range(1, cfg.n_starts + 1):
        rng = np.random.default_rng([cfg.seed, i])
        for attempt in range(20):
            km = KMeans(n_clusters=cfg.k, n_init=10, algorithm="lloyd",
                        random_state=int(rng.integers(2**31 - 1))).fit(X)
            labels = km.labels_
            if np.bincount(labels, minlength=cfg.k).min() > 0:
                break
            log.debug("k-means produced an empty cluster; restarting (%d)", attempt)
        centers = km.cluster_centers_
        starts.append(model_from_partition(X, labels, centers, i / cfg.n_starts, rng,
                                           cfg.omega0, box))
    return _select(X, starts)


def initialize(X, cfg: InitConfig) -> Model:
    if cfg.scheme == "graph":
        return graph_init(X, cfg)
    if cfg.scheme == "lhs":
        return lhs_init(X, cfg)
    return kmeans_init(X, cfg)
