"""Shared numerical kernels.

Gaussian tail and density, adaptive quadrature over possibly infinite
intervals, small symmetric-positive-definite solves, and scalar bisection.
All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.special

from .errors import (
    BracketingError,
    InvalidParameterError,
    QuadratureAccuracyError,
    SingularMatrixError,
)

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerance budget for adaptive quadrature."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0.0):
            raise InvalidParameterError(f"abs_tol must be > 0, got {self.abs_tol}")
        if not (self.rel_tol > 0.0):
            raise InvalidParameterError(f"rel_tol must be > 0, got {self.rel_tol}")
        if self.max_subdivisions < 1:
            raise InvalidParameterError(
                f"max_subdivisions must be >= 1, got {self.max_subdivisions}"
            )


def q_function(x):
    """Standard normal tail probability P(Z > x).

    Accepts scalars or arrays. Implemented through the complementary error
    function, which keeps the absolute error below 1e-15 on [-8, 8]; the
    closed-form variance expressions subtract nearly equal tail terms and
    need that headroom.
    """
    x = np.asarray(x, dtype=float)
    out = 0.5 * scipy.special.erfc(x / _SQRT2)
    return float(out) if out.ndim == 0 else out


def gaussian_pdf(x, variance):
    """Zero-mean normal density with the given variance."""
    if not (variance > 0.0):
        raise InvalidParameterError(f"variance must be > 0, got {variance}")
    x = np.asarray(x, dtype=float)
    out = np.exp(-(x * x) / (2.0 * variance)) / math.sqrt(2.0 * math.pi * variance)
    return float(out) if out.ndim == 0 else out


def integrate(
    f: Callable[[float], float],
    lower: float,
    upper: float,
    spec: QuadratureSpec = QuadratureSpec(),
) -> float:
    """Adaptive quadrature of ``f`` over [lower, upper].

    Infinite endpoints are supported (the underlying Gauss-Kronrod scheme
    maps them with a variable transform). The result is within
    ``max(abs_tol, rel_tol * |value|)`` of the true integral for the
    piecewise-smooth integrands used here; if the subdivision budget runs
    out first, a :class:`QuadratureAccuracyError` carrying the best
    estimate is raised.
    """
    value, abserr, *rest = scipy.integrate.quad(
        f,
        lower,
        upper,
        epsabs=spec.abs_tol,
        epsrel=spec.rel_tol,
        limit=spec.max_subdivisions,
        full_output=1,
    )
    if len(rest) > 1 and abserr > max(spec.abs_tol, spec.rel_tol * abs(value)):
        # rest = (infodict, message[, explain]) when quadpack did not converge
        raise QuadratureAccuracyError(
            f"quadrature did not converge on [{lower}, {upper}]: {rest[1]}",
            estimate=value,
            error_bound=abserr,
        )
    return value


def integrate_piecewise(
    f: Callable[[float], float],
    lower: float,
    upper: float,
    spec: QuadratureSpec = QuadratureSpec(),
    breakpoints: Sequence[float] = (),
) -> float:
    """Integrate ``f`` splitting the interval at the given breakpoints.

    Adaptive schemes converge slowly across non-smooth points, so score
    functions are integrated piecewise with their kinks as segment ends.
    Breakpoints outside (lower, upper) are ignored.
    """
    cuts = sorted(p for p in breakpoints if lower < p < upper)
    edges = [lower, *cuts, upper]
    return sum(
        integrate(f, a, b, spec) for a, b in zip(edges[:-1], edges[1:])
    )


def cholesky_factor(m: np.ndarray, *, pivot_tol: float = 1e-12) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive-definite matrix.

    Raises :class:`SingularMatrixError` naming the first pivot that falls
    below ``pivot_tol`` relative to the largest diagonal entry.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidParameterError(f"expected a square matrix, got shape {m.shape}")
    scale = float(np.max(np.abs(np.diag(m)))) if m.size else 0.0
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-10 * max(scale, 1.0)):
        raise InvalidParameterError("matrix is not symmetric")
    n = m.shape[0]
    L = np.zeros_like(m)
    for j in range(n):
        d = m[j, j] - L[j, :j] @ L[j, :j]
        if not (d > pivot_tol * max(scale, np.finfo(float).tiny)):
            raise SingularMatrixError(
                f"matrix is not positive definite: pivot {j} = {d:.3e}", pivot=j
            )
        L[j, j] = math.sqrt(d)
        if j + 1 < n:
            L[j + 1 :, j] = (m[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def solve_cholesky(L: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Solve ``L L^T z = y`` given a lower Cholesky factor."""
    z = scipy.linalg.solve_triangular(L, y, lower=True)
    return scipy.linalg.solve_triangular(L.T, z, lower=False)


def solve_spd(m: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Solve ``m z = y`` for symmetric positive-definite ``m``."""
    return solve_cholesky(cholesky_factor(m), np.asarray(y, dtype=float))


def bisect(
    f: Callable[[float], float], lo: float, hi: float, tol: float
) -> float:
    """Root of ``f`` on [lo, hi] by bisection, to bracket width ``tol``.

    Requires a sign change over the bracket.
    """
    if not (tol > 0.0):
        raise InvalidParameterError(f"tol must be > 0, got {tol}")
    if not (lo < hi):
        raise InvalidParameterError(f"need lo < hi, got [{lo}, {hi}]")
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise BracketingError(
            f"no sign change on [{lo}, {hi}]: f(lo)={flo:.3e}, f(hi)={fhi:.3e}"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # bracket narrower than float spacing
            break
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if flo * fmid < 0.0:
            hi = mid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)
