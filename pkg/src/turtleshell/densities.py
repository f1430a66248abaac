"""Component densities for the Gaussian/uniform mixture-of-mixtures.

The Gaussian is parameterized by the lower-triangular Cholesky factor ``L``
of its *precision* matrix, so ``precision = L @ L.T`` and the log-determinant
comes straight off the diagonal of ``L``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOG_2PI = float(np.log(2.0 * np.pi))

DIAG_FLOOR = 1e-6
OMEGA_BOUNDS = (0.01, 0.99)


@dataclass(frozen=True)
class GaussianComponent:
    mu: np.ndarray
    L: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).reshape(-1)
        L = np.asarray(self.L, dtype=float).reshape(mu.size, mu.size)
        if np.any(np.triu(L, 1) != 0.0):
            raise ValueError("L must be lower triangular")
        if np.any(np.diag(L) < DIAG_FLOOR):
            raise ValueError(f"diagonal of L must be >= {DIAG_FLOOR}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "L", L)

    @property
    def precision(self) -> np.ndarray:
        return self.L @ self.L.T

    @property
    def covariance(self) -> np.ndarray:
        return np.linalg.inv(self.precision)


@dataclass(frozen=True)
class UniformComponent:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(-1)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if a.shape != b.shape:
            raise ValueError("a and b must have the same length")
        if np.any(b - a <= 0.0):
            raise ValueError("uniform box needs b > a in every dimension")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def width(self) -> np.ndarray:
        return self.b - self.a

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.a + self.b)


def softmax(pi) -> np.ndarray:
    """Softmax with max-subtraction; invariant to constant shifts of ``pi``."""
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 1 or pi.size == 0:
        raise ValueError("softmax expects a non-empty 1-d vector")
    if not np.all(np.isfinite(pi)):
        raise ValueError("softmax input must be finite")
    z = np.exp(pi - pi.max())
    return z / z.sum()


def log_softmax(pi) -> np.ndarray:
    pi = np.asarray(pi, dtype=float)
    m = pi.max()
    return pi - (m + np.log(np.exp(pi - m).sum()))


def gaussian_logpdf(x, g: GaussianComponent):
    """Log density of N(mu, (L L^T)^-1) at ``x``; ``x`` may be (D,) or (N, D)."""
    x = np.asarray(x, dtype=float)
    D = g.mu.size
    if x.shape[-1] != D:
        raise ValueError(f"dimension mismatch: x has {x.shape[-1]}, component has {D}")
    z = (x - g.mu) @ g.L
    return -0.5 * D * LOG_2PI + np.log(np.diag(g.L)).sum() - 0.5 * np.sum(z * z, axis=-1)


def inside_box(x, u: UniformComponent):
    """Indicator of the closed box [a, b]; ``x`` may be (D,) or (N, D)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != u.a.size:
        raise ValueError("dimension mismatch")
    return np.all((x >= u.a) & (x <= u.b), axis=-1)


def uniform_pdf(x, u: UniformComponent):
    inside = inside_box(x, u)
    return np.where(inside, 1.0 / np.prod(u.width), 0.0)


def uniform_logpdf(x, u: UniformComponent):
    inside = inside_box(x, u)
    return np.where(inside, -np.log(u.width).sum(), -np.inf)


def component_logpdf(x, omega: float, g: GaussianComponent, u: UniformComponent):
    """log(omega * phi(x) + (1 - omega) * u(x)), exact when ``x`` is outside the box."""
    lg = gaussian_logpdf(x, g)
    lu = uniform_logpdf(x, u)
    with np.errstate(divide="ignore"):
        log_w = np.log(omega)
        log_1w = np.log1p(-omega)
    return np.logaddexp(log_w + lg, log_1w + lu)


def component_density(x, omega: float, g: GaussianComponent, u: UniformComponent):
    return np.exp(component_logpdf(x, omega, g, u))
