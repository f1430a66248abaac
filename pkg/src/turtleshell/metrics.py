"""Average silhouette width and adjusted Rand index."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist


class UndefinedMetric(ValueError):
    pass


def compact_labels(labels) -> np.ndarray:
    """Map arbitrary labels onto 0..K-1, preserving their sorted order."""
    _, inv = np.unique(np.asarray(labels), return_inverse=True)
    return inv.reshape(-1)


def _row_blocks(n, block):
    for start in range(0, n, block):
        yield slice(start, min(start + block, n))


def silhouette_values(X, labels, rows=None, block: int = 1024) -> np.ndarray:
    """Per-point silhouette widths for the points indexed by ``rows`` (all by default).

    Distances are Euclidean and always taken against the full data set.
    """
    X = np.asarray(X, dtype=float)
    lab = compact_labels(labels)
    K = lab.max() + 1
    if K < 2:
        raise UndefinedMetric("silhouette needs at least two clusters")
    counts = np.bincount(lab, minlength=K).astype(float)
    onehot = np.zeros((X.shape[0], K))
    onehot[np.arange(X.shape[0]), lab] = 1.0
    rows = np.arange(X.shape[0]) if rows is None else np.asarray(rows)
    out = np.empty(rows.size)
    for sl in _row_blocks(rows.size, block):
        r = rows[sl]
        dist = cdist(X[r], X)
        sums = dist @ onehot                         # (b, K)
        own = lab[r]
        n_own = counts[own]
        with np.errstate(invalid="ignore", divide="ignore"):
            a = sums[np.arange(r.size), own] / (n_own - 1.0)
            means = sums / counts
        means[np.arange(r.size), own] = np.inf
        b = means.min(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            s = (b - a) / np.maximum(a, b)
        s[n_own == 1] = 0.0
        s[~np.isfinite(s)] = 0.0
        out[sl] = s
    return out


def silhouette(X, labels, subsample: int | None = None, seed: int = 0) -> float:
    """Average silhouette width; with ``subsample`` only a seeded sample of points is scored."""
    n = np.asarray(X).shape[0]
    rows = None
    if subsample is not None and subsample < n:
        rows = np.sort(np.random.default_rng(seed).choice(n, size=subsample, replace=False))
    return float(silhouette_values(X, labels, rows).mean())


def _comb2(x):
    x = np.asarray(x, dtype=float)
    return x * (x - 1.0) / 2.0


def ari(labels_a, labels_b) -> float:
    """Hubert-Arabie adjusted Rand index."""
    la = compact_labels(labels_a)
    lb = compact_labels(labels_b)
    if la.size != lb.size:
        raise ValueError("label vectors differ in length")
    n = la.size
    table = np.zeros((la.max() + 1, lb.max() + 1))
    np.add.at(table, (la, lb), 1.0)
    index = _comb2(table).sum()
    sa = _comb2(table.sum(axis=1)).sum()
    sb = _comb2(table.sum(axis=0)).sum()
    total = _comb2(n)
    expected = sa * sb / total if total > 0 else 0.0
    max_index = 0.5 * (sa + sb)
    if max_index == expected:
        return 1.0
    return float((index - expected) / (max_index - expected))
