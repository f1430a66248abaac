"""Conditional model, regularized mutual-information objective and its gradient.

Parameters of K clusters are stored stacked:

    pi     (K,)        softmax logits of the outer mixing proportions
    omega  (K,)        inner Gaussian weight
    mu     (K, D)      Gaussian means
    L      (K, D, D)   lower Cholesky factors of the precisions
    a      (K, D)      uniform box lower corners
    w      (K, D)      uniform box widths (b = a + w)

The flat layout used by the optimizer is, per cluster,
``[pi, omega, mu, tril(L) row-major, a, w]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .densities import (
    DIAG_FLOOR,
    LOG_2PI,
    OMEGA_BOUNDS,
    GaussianComponent,
    UniformComponent,
    log_softmax,
    softmax,
)

P_FLOOR = 1e-300


@dataclass(frozen=True)
class Hyper:
    lambda1: float = 0.0
    lambda2: float = 0.0

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("tuning parameters must be nonnegative")


@dataclass(frozen=True)
class ClusterParams:
    pi: float
    omega: float
    gaussian: GaussianComponent
    uniform: UniformComponent


@dataclass
class Model:
    pi: np.ndarray
    omega: np.ndarray
    mu: np.ndarray
    L: np.ndarray
    a: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        self.pi = np.asarray(self.pi, dtype=float).reshape(-1)
        K = self.pi.size
        if K < 1:
            raise ValueError("a model needs at least one cluster")
        self.omega = np.asarray(self.omega, dtype=float).reshape(K)
        self.mu = np.asarray(self.mu, dtype=float).reshape(K, -1)
        D = self.mu.shape[1]
        self.L = np.asarray(self.L, dtype=float).reshape(K, D, D)
        self.a = np.asarray(self.a, dtype=float).reshape(K, D)
        self.w = np.asarray(self.w, dtype=float).reshape(K, D)

    @property
    def K(self) -> int:
        return self.pi.size

    @property
    def D(self) -> int:
        return self.mu.shape[1]

    @property
    def b(self) -> np.ndarray:
        return self.a + self.w

    @property
    def tau(self) -> np.ndarray:
        return softmax(self.pi)

    @property
    def precision(self) -> np.ndarray:
        return self.L @ np.swapaxes(self.L, 1, 2)

    @property
    def covariance(self) -> np.ndarray:
        return np.linalg.inv(self.precision)

    @property
    def clusters(self) -> list[ClusterParams]:
        return [
            ClusterParams(
                pi=float(self.pi[k]),
                omega=float(self.omega[k]),
                gaussian=GaussianComponent(self.mu[k], self.L[k]),
                uniform=UniformComponent(self.a[k], self.b[k]),
            )
            for k in range(self.K)
        ]

    @classmethod
    def from_clusters(cls, clusters) -> "Model":
        clusters = list(clusters)
        if not clusters:
            raise ValueError("a model needs at least one cluster")
        return cls(
            pi=[c.pi for c in clusters],
            omega=[c.omega for c in clusters],
            mu=np.stack([c.gaussian.mu for c in clusters]),
            L=np.stack([c.gaussian.L for c in clusters]),
            a=np.stack([c.uniform.a for c in clusters]),
            w=np.stack([c.uniform.width for c in clusters]),
        )

    def copy(self) -> "Model":
        return Model(self.pi.copy(), self.omega.copy(), self.mu.copy(),
                     self.L.copy(), self.a.copy(), self.w.copy())

    def subset(self, keep) -> "Model":
        keep = np.asarray(keep)
        return Model(self.pi[keep], self.omega[keep], self.mu[keep],
                     self.L[keep], self.a[keep], self.w[keep])


# ---------------------------------------------------------------------------
# flat packing

def n_params_per_cluster(D: int) -> int:
    return 2 + 3 * D + D * (D + 1) // 2


def pack(m: Model) -> np.ndarray:
    K, D = m.K, m.D
    rows, cols = np.tril_indices(D)
    blocks = [
        m.pi[:, None],
        m.omega[:, None],
        m.mu,
        m.L[:, rows, cols],
        m.a,
        m.w,
    ]
    return np.concatenate(blocks, axis=1).reshape(K * n_params_per_cluster(D))


def unpack(v, K: int, D: int) -> Model:
    v = np.asarray(v, dtype=float)
    size = n_params_per_cluster(D)
    if v.ndim != 1 or v.size != K * size:
        raise ValueError(f"expected a flat vector of length {K * size}, got shape {v.shape}")
    M = v.reshape(K, size)
    rows, cols = np.tril_indices(D)
    nt = rows.size
    L = np.zeros((K, D, D))
    L[:, rows, cols] = M[:, 2 + D:2 + D + nt]
    o = 2 + D + nt
    return Model(
        pi=M[:, 0].copy(),
        omega=M[:, 1].copy(),
        mu=M[:, 2:2 + D].copy(),
        L=L,
        a=M[:, o:o + D].copy(),
        w=M[:, o + D:o + 2 * D].copy(),
    )


@dataclass(frozen=True)
class DataBox:
    """Per-dimension extent of the (standardized) data; sets the box bounds."""

    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def from_data(cls, X) -> "DataBox":
        X = np.asarray(X, dtype=float)
        return cls(X.min(axis=0), X.max(axis=0))

    @property
    def range(self) -> np.ndarray:
        r = self.hi - self.lo
        return np.where(r > 0, r, 1.0)

    @property
    def width_floor(self) -> np.ndarray:
        return 1e-6 * self.range


def param_bounds(K: int, D: int, box: DataBox) -> tuple[np.ndarray, np.ndarray]:
    """Lower/upper bound vectors in pack() layout."""
    rows, cols = np.tril_indices(D)
    size = n_params_per_cluster(D)
    lo = np.full((K, size), -np.inf)
    hi = np.full((K, size), np.inf)
    lo[:, 1], hi[:, 1] = OMEGA_BOUNDS
    diag = np.flatnonzero(rows == cols)
    lo[:, 2 + D + diag] = DIAG_FLOOR
    o = 2 + D + rows.size
    rng = box.range
    lo[:, o:o + D] = box.lo - 0.1 * rng
    hi[:, o:o + D] = box.hi + 0.1 * rng
    lo[:, o + D:o + 2 * D] = box.width_floor
    hi[:, o + D:o + 2 * D] = 1.2 * rng
    return lo.reshape(-1), hi.reshape(-1)


# ---------------------------------------------------------------------------
# model evaluation

@dataclass
class _Terms:
    """Intermediate quantities shared by objective and gradient."""

    Z: np.ndarray          # (K, N, D) whitened residuals L^T (x - mu)
    E: np.ndarray          # (K, N, D) raw residuals x - mu
    inside: np.ndarray     # (K, N) inside-box indicator
    gshare: np.ndarray     # (K, N) omega*phi / f, share of the Gaussian within f
    log_q: np.ndarray      # (K, N) log s(pi) + log f
    P: np.ndarray          # (N, K) responsibilities


def _check_dims(X, m: Model) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("X must be an (N, D) array with N >= 1")
    if X.shape[1] != m.D:
        raise ValueError(f"dimension mismatch: X has {X.shape[1]} columns, model has D={m.D}")
    return X


def _terms(X, m: Model) -> _Terms:
    X = _check_dims(X, m)
    D = m.D
    E = X[None, :, :] - m.mu[:, None, :]
    Z = np.einsum("knd,kde->kne", E, m.L)
    logdet = np.log(np.diagonal(m.L, axis1=1, axis2=2)).sum(axis=1)
    log_phi = -0.5 * D * LOG_2PI + logdet[:, None] - 0.5 * np.einsum("knd,knd->kn", Z, Z)
    inside = np.all((X[None] >= m.a[:, None, :]) & (X[None] <= m.b[:, None, :]), axis=2)
    log_u = np.where(inside, -np.log(m.w).sum(axis=1)[:, None], -np.inf)
    with np.errstate(divide="ignore"):
        lg = np.log(m.omega)[:, None] + log_phi
        lu = np.log1p(-m.omega)[:, None] + log_u
    log_f = np.logaddexp(lg, lu)
    with np.errstate(invalid="ignore"):
        gshare = np.where(np.isfinite(log_f), np.exp(lg - log_f), 1.0)
    log_q = log_softmax(m.pi)[:, None] + log_f

    log_norm = logsumexp(log_q, axis=0)
    P = np.empty((X.shape[0], m.K))
    ok = np.isfinite(log_norm)
    P[ok] = np.exp(log_q[:, ok] - log_norm[ok]).T
    P[~ok] = 1.0 / m.K
    return _Terms(Z=Z, E=E, inside=inside, gshare=gshare, log_q=log_q, P=P)


def posterior(X, m: Model) -> np.ndarray:
    """N x K matrix of a-posteriori cluster probabilities."""
    return _terms(X, m).P


def mutual_information(P) -> float:
    """H(column means) minus the mean row entropy, with 0 log 0 = 0."""
    P = np.asarray(P, dtype=float)
    phat = P.mean(axis=0)
    h_marg = -np.sum(phat * np.log(np.maximum(phat, P_FLOOR)))
    h_cond = -np.sum(P * np.log(np.maximum(P, P_FLOOR))) / P.shape[0]
    return float(h_marg - h_cond)


def r1(m: Model, lambda1: float) -> float:
    return float(-lambda1 * log_softmax(m.pi).sum())


def r2(m: Model, lambda2: float) -> float:
    d = 0.5 * (m.a + m.b) - m.mu
    z = np.einsum("kd,kde->ke", d, m.L)
    return float(lambda2 * np.sum(z * z))


def objective(X, m: Model, h: Hyper) -> float:
    return mutual_information(posterior(X, m)) - r1(m, h.lambda1) - r2(m, h.lambda2)


def _grad_from_terms(t: _Terms, m: Model, h: Hyper) -> Model:
    """Gradient of F as a Model-shaped container (in (a, w) coordinates)."""
    N = t.P.shape[0]
    K, D = m.K, m.D
    P = t.P
    logP = np.log(np.maximum(P, P_FLOOR))
    log_phat = np.log(np.maximum(P.mean(axis=0), P_FLOOR))
    R = logP - log_phat
    g = np.sum(P * R, axis=1, keepdims=True)
    # dI/dlog q_ki: only the k-th unnormalized term moves for cluster-k params
    W = (P * (R - g)).T / N                                   # (K, N)

    tau = softmax(m.pi)
    d_pi = W.sum(axis=1) + h.lambda1 * (1.0 - K * tau)

    omega = m.omega
    ush = 1.0 - t.gshare
    with np.errstate(divide="ignore", invalid="ignore"):
        dlogf_domega = t.gshare / omega[:, None] - ush / (1.0 - omega)[:, None]
    dlogf_domega = np.nan_to_num(dlogf_domega)
    d_omega = np.sum(W * dlogf_domega, axis=1)

    G = W * t.gshare                                          # (K, N)
    prec = m.precision
    d_mu = np.einsum("kde,ke->kd", prec, np.einsum("kn,knd->kd", G, t.E))

    M = np.einsum("kn,knd,kne->kde", G, t.E, t.Z)
    d_L = -M
    idx = np.arange(D)
    d_L[:, idx, idx] += G.sum(axis=1)[:, None] / np.diagonal(m.L, axis1=1, axis2=2)

    # within the box the uniform density depends on the width only
    d_w = -np.sum(W * ush * t.inside, axis=1)[:, None] / m.w
    d_a = np.zeros((K, D))

    if h.lambda2:
        d = 0.5 * (m.a + m.b) - m.mu
        Pd = np.einsum("kde,ke->kd", prec, d)
        d_mu += 2.0 * h.lambda2 * Pd
        d_L -= 2.0 * h.lambda2 * np.einsum("kd,ke,kef->kdf", d, d, m.L)
        d_a -= 2.0 * h.lambda2 * Pd
        d_w -= h.lambda2 * Pd

    d_L = np.tril(d_L)
    return Model(d_pi, d_omega, d_mu, d_L, d_a, d_w)


def gradient(X, m: Model, h: Hyper) -> np.ndarray:
    """Analytic gradient of the objective, flat in pack() layout."""
    return pack(_grad_from_terms(_terms(X, m), m, h))


def objective_and_gradient(X, m: Model, h: Hyper) -> tuple[float, np.ndarray]:
    t = _terms(X, m)
    F = mutual_information(t.P) - r1(m, h.lambda1) - r2(m, h.lambda2)
    return F, pack(_grad_from_terms(t, m, h))
