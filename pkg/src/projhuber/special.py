"""Scalar special functions used by the Projected Huber normalizers and moments.

Everything here is built around the scaled upper incomplete gamma

    G_k(a) = Gamma(k, a) * exp(a) * a**(1 - k) = int_0^1 (1 + log(1/y)/a)**(k - 1) dy

which stays O(1) for all a > 0 and therefore avoids the underflow of
``exp(-a)`` that plagues the unscaled function.  Only the orders the
distribution needs (k in {-3, -2, -1, 1, 2, 3}) are supported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SUPPORTED_ORDERS = (-3, -2, -1, 1, 2, 3)

# Above this the downward recurrence loses roughly a factor `a` per step.
RECURRENCE_MAX_A = 30.0


class DomainError(ValueError):
    """Raised when an argument lies outside a function's domain."""


@dataclass(frozen=True)
class QuadratureConfig:
    node_count: int = 64
    abs_tol: float = 1e-12

    def __post_init__(self):
        if self.node_count < 2:
            raise DomainError(f"node_count must be >= 2, got {self.node_count}")
        if not self.abs_tol > 0:
            raise DomainError(f"abs_tol must be > 0, got {self.abs_tol}")


DEFAULT_QUADRATURE = QuadratureConfig()


@lru_cache(maxsize=8)
def _legendre_unit(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to (0, 1)."""
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


def huber(r):
    """Huber function with unit threshold and its derivative.

    Returns ``(r**2/2, r)`` for ``r <= 1`` and ``(r - 1/2, 1)`` otherwise.
    Works elementwise on arrays.
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0) or np.any(np.isnan(r_arr)):
        raise DomainError("huber is defined for r >= 0")
    inner = r_arr <= 1.0
    value = np.where(inner, 0.5 * r_arr * r_arr, r_arr - 0.5)
    deriv = np.where(inner, r_arr, 1.0)
    if np.ndim(r) == 0:
        return float(value), float(deriv)
    return value, deriv


def _check_positive(a):
    a_arr = np.asarray(a, dtype=float)
    if not np.all(a_arr > 0):
        raise DomainError("argument must be > 0")
    return a_arr


def _mapped_integral(a: np.ndarray, power: int, n: int) -> np.ndarray:
    """int_0^1 (1 + log(1/y)/a)**(-power) dy by Gauss-Legendre.

    The substitution y = exp(1 - 1/u) turns the logarithmic endpoint
    behaviour at y -> 0 into an exp(-1/u) factor whose derivatives all
    vanish, so fixed-order Gauss-Legendre converges to machine precision.
    """
    u, w = _legendre_unit(n)
    a_col = a[..., None]
    # (1 + (1/u - 1)/a)^-p * dy/du  with dy/du = y/u^2
    denom = a_col * u + (1.0 - u)
    integrand = (a_col * u / denom) ** power * np.exp(1.0 - 1.0 / u) / (u * u)
    return integrand @ w


def g1(a, config: QuadratureConfig = DEFAULT_QUADRATURE):
    """a**2 * Gamma(-1, a) * exp(a), always in (0, 1) for a > 0."""
    a_arr = _check_positive(a)
    out = _mapped_integral(np.atleast_1d(a_arr), 2, config.node_count)
    return float(out[0]) if np.ndim(a) == 0 else out.reshape(a_arr.shape)


def scaled_gamma(k: int, a, config: QuadratureConfig = DEFAULT_QUADRATURE):
    """G_k(a) = Gamma(k, a) exp(a) a**(1-k) for k in SUPPORTED_ORDERS."""
    if k not in SUPPORTED_ORDERS:
        raise DomainError(f"order {k} not supported")
    a_arr = np.atleast_1d(_check_positive(a))
    if k == 1:
        out = np.ones_like(a_arr)
    elif k == 2:
        out = 1.0 + 1.0 / a_arr
    elif k == 3:
        out = 1.0 + 2.0 / a_arr + 2.0 / (a_arr * a_arr)
    else:
        out = np.empty_like(a_arr)
        small = a_arr <= RECURRENCE_MAX_A
        if np.any(small):
            a_s = a_arr[small]
            g = _mapped_integral(a_s, 2, config.node_count)
            # Gamma(s,x) = (Gamma(s+1,x) - x^s e^-x)/s  <=>  G_s = a (G_{s+1} - 1)/s
            for s in range(-2, k - 1, -1):
                g = a_s * (g - 1.0) / s
            out[small] = g
        if np.any(~small):
            out[~small] = _mapped_integral(a_arr[~small], 1 - k, config.node_count)
    return float(out[0]) if np.ndim(a) == 0 else out.reshape(np.shape(a))


def upper_gamma(k: int, a, config: QuadratureConfig = DEFAULT_QUADRATURE):
    """Upper incomplete gamma Gamma(k, a) = int_a^inf t**(k-1) exp(-t) dt."""
    scaled = scaled_gamma(k, a, config)
    a_arr = np.asarray(a, dtype=float)
    return scaled * np.exp(-a_arr) * a_arr ** (k - 1.0)


def log_norm_depth(a, config: QuadratureConfig = DEFAULT_QUADRATURE):
    """log(exp(-a)/a + Gamma(-1, a) a) and its derivative in a.

    Evaluated as ``-log(a) - a + log1p(g1(a))`` so nothing underflows for
    large ``a``.  The derivative is ``1/a - 2 (1/a + 1) / (1 + g1(a))``.
    """
    a_arr = _check_positive(a)
    g = g1(a_arr, config)
    value = -np.log(a_arr) - a_arr + np.log1p(g)
    deriv = 1.0 / a_arr - 2.0 * (1.0 / a_arr + 1.0) / (1.0 + g)
    if np.ndim(a) == 0:
        return float(value), float(deriv)
    return value, deriv


def adaptive_simpson(f, lo: float, hi: float, abs_tol: float = 1e-12, max_depth: int = 60) -> float:
    """Adaptive Simpson quadrature of a scalar function on [lo, hi].

    Used as an independent cross-check of the fixed-order rules above.
    """
    def simpson(fa, fm, fb, h):
        return h * (fa + 4.0 * fm + fb) / 6.0

    flo, fhi = f(lo), f(hi)
    mid = 0.5 * (lo + hi)
    fmid = f(mid)
    total = 0.0
    stack = [(lo, hi, flo, fmid, fhi, simpson(flo, fmid, fhi, hi - lo), abs_tol, 0)]
    while stack:
        x0, x1, f0, fm, f1, whole, tol, depth = stack.pop()
        xm = 0.5 * (x0 + x1)
        xl, xr = 0.5 * (x0 + xm), 0.5 * (xm + x1)
        fl, fr = f(xl), f(xr)
        left = simpson(f0, fl, fm, xm - x0)
        right = simpson(fm, fr, f1, x1 - xm)
        delta = left + right - whole
        if depth >= max_depth or abs(delta) <= 15.0 * tol:
            total += left + right + delta / 15.0
        else:
            stack.append((x0, xm, f0, fl, fm, left, tol / 2.0, depth + 1))
            stack.append((xm, x1, fm, fr, f1, right, tol / 2.0, depth + 1))
    return total


def scaled_gamma_simpson(k: int, a: float, abs_tol: float = 1e-12) -> float:
    """G_k(a) by adaptive Simpson directly on the (0, 1] integral, no recurrence."""
    if not a > 0:
        raise DomainError("a must be > 0")

    def integrand(y):
        if y <= 0.0:
            return 0.0 if k < 1 else math.inf
        return (1.0 + math.log(1.0 / y) / a) ** (k - 1)

    return adaptive_simpson(integrand, 0.0, 1.0, abs_tol)


def g1_simpson(a: float, abs_tol: float = 1e-12) -> float:
    return scaled_gamma_simpson(-1, a, abs_tol)
