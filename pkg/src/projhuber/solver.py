"""Backtracking descent for convex objectives with kinks and infinite barriers.

Directions come from a BFGS inverse-Hessian estimate (reset to steepest
descent whenever it stops being a descent direction).  Steps are chosen by
Armijo backtracking, and ``+inf`` objective values are simply rejected by the
line search, which is how the ``z <= 0`` region is kept out.  Optional lower
bounds are handled by projection with an active set.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

logger = logging.getLogger(__name__)

ARMIJO = 1e-4
SHRINK = 0.5
# Accepted steps that lower f by less than this (relative) count as stagnation.
FLAT_DECREASE = 1e-15
FLAT_PATIENCE = 20


@dataclass
class DescentResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    iterations: int
    converged: bool


def _projected_grad(x, g, lower):
    if lower is None:
        return g
    at_bound = (x <= lower) & (g > 0)
    return np.where(at_bound, 0.0, g)


def minimize(
    fun_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0,
    lower=None,
    grad_tol: float = 1e-8,
    step_tol: float = 1e-12,
    max_iter: int = 5000,
    max_backtracks: int = 80,
) -> DescentResult:
    """Minimize ``fun_grad`` starting from a point with finite objective.

    ``lower`` is an optional array of lower bounds (``-inf`` for free
    coordinates).  Converged means the projected (sub)gradient norm fell
    below ``grad_tol`` or no step longer than ``step_tol`` could decrease the
    objective, or ``FLAT_PATIENCE`` successive steps left f unchanged to
    machine precision (an infimum approached only at infinity).
    """
    x = np.array(x0, dtype=float)
    if lower is not None:
        lower = np.broadcast_to(np.asarray(lower, dtype=float), x.shape)
        x = np.maximum(x, lower)
    f, g = fun_grad(x)
    if not np.isfinite(f):
        raise ValueError("starting point has infinite objective")
    n = x.size
    H = np.eye(n)
    fresh = True
    flat_steps = 0
    for it in range(1, max_iter + 1):
        pg = _projected_grad(x, g, lower)
        if np.linalg.norm(pg) < grad_tol:
            return DescentResult(x, f, g, it - 1, True)
        free = pg != 0.0 if lower is not None else np.ones(n, dtype=bool)
        d = np.zeros(n)
        d[free] = -(H[np.ix_(free, free)] @ pg[free])
        if pg @ d >= 0:
            H = np.eye(n)
            fresh = True
            d = -pg
        t = 1.0
        accepted = False
        for _ in range(max_backtracks):
            x_new = x + t * d
            if lower is not None:
                x_new = np.maximum(x_new, lower)
            step = x_new - x
            if np.linalg.norm(step) < step_tol:
                break
            f_new, g_new = fun_grad(x_new)
            if np.isfinite(f_new) and f_new <= f + ARMIJO * (g @ step):
                accepted = True
                break
            t *= SHRINK
        if not accepted:
            if not fresh:
                # Stale curvature can make the quasi-Newton step useless at a kink.
                H = np.eye(n)
                fresh = True
                continue
            return DescentResult(x, f, g, it, True)
        y = g_new - g
        sy = step @ y
        if sy > 1e-12 * np.linalg.norm(step) * np.linalg.norm(y):
            if fresh:
                H = np.eye(n) * (sy / (y @ y))
            rho = 1.0 / sy
            Hy = H @ y
            H = H - rho * (np.outer(step, Hy) + np.outer(Hy, step)) + (rho * rho * (y @ Hy) + rho) * np.outer(step, step)
            fresh = False
        flat_steps = flat_steps + 1 if f - f_new <= FLAT_DECREASE * max(1.0, abs(f)) else 0
        x, f, g = x_new, f_new, g_new
        if flat_steps >= FLAT_PATIENCE:
            return DescentResult(x, f, g, it, True)
    logger.debug("descent hit max_iter=%d with f=%g", max_iter, f)
    return DescentResult(x, f, g, max_iter, False)
