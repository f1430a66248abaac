"""Box-constrained quasi-Newton maximization (L-BFGS-B)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize


class NumericalFailure(RuntimeError):
    """Objective or gradient went non-finite at a feasible point."""

    def __init__(self, message, x):
        super().__init__(message)
        self.x = np.array(x, copy=True)


@dataclass(frozen=True)
class Bounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape:
            raise ValueError("bound vectors differ in shape")
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def project(self, x) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def projected_gradient(self, x, g) -> np.ndarray:
        """Ascent-direction projected gradient: zero where a bound blocks the step."""
        pg = np.array(g, dtype=float, copy=True)
        pg[(x <= self.lower) & (g < 0)] = 0.0
        pg[(x >= self.upper) & (g > 0)] = 0.0
        return pg


@dataclass(frozen=True)
class OptimizerConfig:
    memory: int = 10
    max_iters: int = 500
    grad_tol: float = 1e-6
    f_tol: float = 1e-10

    def __post_init__(self):
        if self.memory < 1 or self.max_iters < 1 or self.grad_tol <= 0 or self.f_tol <= 0:
            raise ValueError("optimizer settings must be positive")


@dataclass
class OptTrace:
    values: list = field(default_factory=list)
    pg_norms: list = field(default_factory=list)
    reason: str = ""
    n_evals: int = 0

    @property
    def n_iters(self) -> int:
        return max(len(self.values) - 1, 0)


def maximize(f, grad, x0, bounds: Bounds, cfg: OptimizerConfig = OptimizerConfig(),
             fg=None):
    """Maximize ``f`` over the box ``bounds`` starting from ``x0``.

    ``fg`` may be given instead of separate calls when objective and gradient
    share work; it returns ``(f(x), grad(x))``.
    Returns ``(x_best, trace)``.
    """
    x0 = bounds.project(np.asarray(x0, dtype=float))
    trace = OptTrace()
    cache = {}

    def evaluate(x):
        key = x.tobytes()
        hit = cache.get(key)
        if hit is not None:
            return hit
        if fg is not None:
            fx, gx = fg(x)
        else:
            fx, gx = f(x), grad(x)
        fx = float(fx)
        gx = np.asarray(gx, dtype=float)
        trace.n_evals += 1
        if not np.isfinite(fx) or not np.all(np.isfinite(gx)):
            raise NumericalFailure("non-finite objective or gradient", x)
        cache.clear()
        cache[key] = (fx, gx)
        return fx, gx

    def neg(x):
        fx, gx = evaluate(x)
        return -fx, -gx

    def record(x, fx, gx):
        trace.values.append(fx)
        trace.pg_norms.append(float(np.max(np.abs(bounds.projected_gradient(x, gx)), initial=0.0)))

    best = {"x": x0.copy()}
    f0, g0 = evaluate(x0)
    record(x0, f0, g0)

    def callback(intermediate_result):
        x = np.asarray(intermediate_result.x, dtype=float)
        fx, gx = evaluate(x)
        record(x, fx, gx)
        best["x"] = x.copy()

    lb = [None if not np.isfinite(v) else v for v in bounds.lower]
    ub = [None if not np.isfinite(v) else v for v in bounds.upper]
    res = minimize(
        neg, x0, jac=True, method="L-BFGS-B", bounds=list(zip(lb, ub)),
        callback=callback,
        options={
            "maxcor": cfg.memory,
            "maxiter": cfg.max_iters,
            "gtol": cfg.grad_tol,
            "ftol": cfg.f_tol,
            "maxfun": 20 * cfg.max_iters,
        },
    )
    x_best = best["x"]
    # the final iterate may not have passed through the callback
    x_res = bounds.project(np.asarray(res.x, dtype=float))
    f_res, g_res = evaluate(x_res)
    if f_res > trace.values[-1]:
        record(x_res, f_res, g_res)
        x_best = x_res
    trace.reason = str(res.message)
    return x_best, trace
