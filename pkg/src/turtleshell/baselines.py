"""Full-covariance Gaussian mixture EM with BIC / ICL order selection.

Sign convention: ``BIC = 2 loglik - rho log N`` and larger is better; ICL adds
twice the MAP-weighted log posterior, which is never positive.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .densities import LOG_2PI

log = logging.getLogger(__name__)


@dataclass
class GmmFit:
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    loglik: float
    loglik_trace: list = field(default_factory=list)

    @property
    def K(self) -> int:
        return self.weights.size

    @property
    def D(self) -> int:
        return self.means.shape[1]

    @property
    def n_params(self) -> int:
        K, D = self.K, self.D
        return (K - 1) + K * D + K * D * (D + 1) // 2


class DegenerateComponent(RuntimeError):
    pass


def _log_joint(X, weights, means, covs):
    """(N, K) matrix of log tau_k + log phi(x_i | mu_k, Sigma_k)."""
    N, D = X.shape
    out = np.empty((N, weights.size))
    for k in range(weights.size):
        try:
            C = np.linalg.cholesky(covs[k])
        except np.linalg.LinAlgError as exc:
            raise DegenerateComponent(str(exc)) from exc
        z = np.linalg.solve(C, (X - means[k]).T)
        out[:, k] = (np.log(weights[k]) - 0.5 * D * LOG_2PI
                     - np.log(np.diag(C)).sum() - 0.5 * np.sum(z * z, axis=0))
    return out


def gmm_posterior(X, fit: GmmFit) -> np.ndarray:
    lj = _log_joint(np.asarray(X, dtype=float), fit.weights, fit.means, fit.covariances)
    return np.exp(lj - logsumexp(lj, axis=1, keepdims=True))


def _kmeanspp(X, K, rng):
    N = X.shape[0]
    centers = [X[rng.integers(N)]]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for _ in range(1, K):
        total = d2.sum()
        idx = rng.integers(N) if total <= 0 else rng.choice(N, p=d2 / total)
        centers.append(X[idx])
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))
    return np.array(centers)


def _em_run(X, K, rng, max_iter, tol):
    N, D = X.shape
    ridge = 1e-6 * np.trace(np.atleast_2d(np.cov(X.T, bias=True))) / D
    centers = _kmeanspp(X, K, rng)
    lab = np.argmin(((X[:, None, :] - centers[None]) ** 2).sum(axis=2), axis=1)
    R = np.zeros((N, K))
    R[np.arange(N), lab] = 1.0
    trace = []
    prev = -np.inf
    for _ in range(max_iter):
        nk = R.sum(axis=0)
        if np.any(nk < 1e-8):
            raise DegenerateComponent("empty component")
        weights = nk / N
        means = (R.T @ X) / nk[:, None]
        covs = np.empty((K, D, D))
        for k in range(K):
            E = X - means[k]
            covs[k] = (R[:, k, None] * E).T @ E / nk[k] + ridge * np.eye(D)
        lj = _log_joint(X, weights, means, covs)
        norm = logsumexp(lj, axis=1)
        ll = float(norm.sum())
        trace.append(ll)
        R = np.exp(lj - norm[:, None])
        if np.isfinite(prev) and abs(ll - prev) <= tol * abs(ll):
            break
        prev = ll
    return GmmFit(weights, means, covs, ll, trace)


def gmm_em(X, K: int, n_restarts: int = 10, seed: int = 0,
           max_iter: int = 500, tol: float = 1e-8) -> GmmFit:
    """Best-of-restarts EM fit of a K-component full-covariance GMM."""
    X = np.asarray(X, dtype=float)
    if K < 1:
        raise ValueError("K must be >= 1")
    best = None
    attempts = 0
    run = 0
    while run < n_restarts or (best is None and attempts < 10 * n_restarts):
        rng = np.random.default_rng([seed, K, attempts])
        attempts += 1
        try:
            fit = _em_run(X, K, rng, max_iter, tol)
        except DegenerateComponent:
            log.debug("EM restart %d for K=%d degenerated", attempts, K)
            continue
        run += 1
        if best is None or fit.loglik > best.loglik:
            best = fit
    if best is None:
        raise DegenerateComponent(f"every EM restart degenerated for K={K}")
    return best


def bic(fit: GmmFit, N: int) -> float:
    return 2.0 * fit.loglik - fit.n_params * np.log(N)


def icl(fit: GmmFit, X, N: int | None = None) -> float:
    X = np.asarray(X, dtype=float)
    N = X.shape[0] if N is None else N
    P = gmm_posterior(X, fit)
    rows = np.arange(P.shape[0])
    lab = np.argmax(P, axis=1)
    p_map = P[rows, lab]
    ent = np.sum(np.log(p_map, where=p_map > 0, out=np.zeros_like(p_map)))
    return bic(fit, N) + 2.0 * ent


def select_k(X, k_range, criterion: str = "bic", n_restarts: int = 10, seed: int = 0):
    """Fit each K in ``k_range`` and return ``(K*, fit)`` maximizing the criterion."""
    X = np.asarray(X, dtype=float)
    ks = list(k_range)
    if not ks:
        raise ValueError("empty K range")
    if criterion not in ("bic", "icl"):
        raise ValueError(f"unknown criterion {criterion!r}")
    best = None
    for K in ks:
        fit = gmm_em(X, K, n_restarts=n_restarts, seed=seed)
        score = bic(fit, X.shape[0]) if criterion == "bic" else icl(fit, X)
        if best is None or score > best[0]:
            best = (score, K, fit)
    return best[1], best[2]


def select_k_both(X, k_range, n_restarts: int = 10, seed: int = 0):
    """BIC and ICL choices from a single set of fits: ``{"bic": (K, fit), "icl": (K, fit)}``."""
    X = np.asarray(X, dtype=float)
    fits = {K: gmm_em(X, K, n_restarts=n_restarts, seed=seed) for K in k_range}
    out = {}
    for name, score in (("bic", lambda f: bic(f, X.shape[0])), ("icl", lambda f: icl(f, X))):
        K = max(fits, key=lambda k: score(fits[k]))
        out[name] = (K, fits[K])
    return out
