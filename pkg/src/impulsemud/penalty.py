"""M-estimator penalty families.

Each family is a triple (rho, psi, psi_prime): an even penalty rho with
rho(0) = 0, its odd derivative psi (the score), and the score derivative.
Three members are provided:

* :class:`LsPenalty` - quadratic penalty, the non-robust baseline.
* :class:`HuberPenalty` - clipped-linear score, the minimax detector over
  an epsilon-contaminated Gaussian neighborhood.
* :class:`XPenalty` - score linear inside +-sigma and redescending as
  sigma/x outside; bounded influence with |psi| <= 1 peaking at |x| = sigma.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import InvalidParameterError
from .noise import MixtureNoiseModel
from .numerics import bisect, gaussian_pdf, q_function

HUBER_THRESHOLD_CAP = 8.0


def _as_float_array(x):
    return np.asarray(x, dtype=float)


def _scalar_like(x, out):
    return float(out) if np.ndim(x) == 0 else out


class PenaltyFamily:
    """Interface shared by all penalty families.

    ``rho``/``psi``/``psi_prime`` accept scalars or arrays; ``kink_points``
    lists the finitely many points where ``psi_prime`` jumps (integrands
    are split there before quadrature).
    """

    kink_points: tuple = ()

    def rho(self, x):
        raise NotImplementedError

    def psi(self, x):
        raise NotImplementedError

    def psi_prime(self, x):
        raise NotImplementedError

    def __repr__(self):
        return self.__class__.__name__


class LsPenalty(PenaltyFamily):
    """Quadratic penalty: rho = x^2/2, psi = x, psi' = 1.

    Unbounded score; serves as the negative control in robustness tests.
    """

    def rho(self, x):
        x = _as_float_array(x)
        return _scalar_like(x, 0.5 * x * x)

    def psi(self, x):
        x = _as_float_array(x)
        return _scalar_like(x, x.copy() if x.ndim else x)

    def psi_prime(self, x):
        x = _as_float_array(x)
        return _scalar_like(x, np.ones_like(x))


class HuberPenalty(PenaltyFamily):
    """Clipped-linear score: psi = x on [-gamma, gamma], +-gamma outside."""

    def __init__(self, gamma: float):
        if not (gamma > 0.0):
            raise InvalidParameterError(f"gamma must be > 0, got {gamma}")
        self.gamma = float(gamma)
        self.kink_points = (-self.gamma, self.gamma)

    def rho(self, x):
        x = _as_float_array(x)
        ax = np.abs(x)
        inner = ax <= self.gamma
        out = np.where(inner, 0.5 * x * x, self.gamma * ax - 0.5 * self.gamma**2)
        return _scalar_like(x, out)

    def psi(self, x):
        x = _as_float_array(x)
        return _scalar_like(x, np.clip(x, -self.gamma, self.gamma))

    def psi_prime(self, x):
        # At the kinks |x| = gamma the inner-branch value 1 is returned.
        x = _as_float_array(x)
        out = np.where(np.abs(x) <= self.gamma, 1.0, 0.0)
        return _scalar_like(x, out)

    def __repr__(self):
        return f"HuberPenalty(gamma={self.gamma!r})"


def x_psi(x, sigma):
    """Redescending score: x/sigma inside +-sigma, sigma/x outside.

    Odd and continuous, with peak magnitude 1 attained at |x| = sigma.
    """
    if not (sigma > 0.0):
        raise InvalidParameterError(f"sigma must be > 0, got {sigma}")
    x = _as_float_array(x)
    inner = np.abs(x) <= sigma
    # Where the outer branch applies, |x| > sigma > 0, so the guarded
    # denominator never divides by zero.
    out = np.where(inner, x / sigma, sigma / np.where(inner, 1.0, x))
    return _scalar_like(x, out)


def x_rho(x, sigma):
    """Penalty whose derivative is :func:`x_psi`.

    Inner branch x^2/(2 sigma); outer branch sigma*ln|x| plus the constant
    sigma/2 - sigma*ln(sigma) that makes rho(0) = 0 and rho continuous at
    |x| = sigma.
    """
    if not (sigma > 0.0):
        raise InvalidParameterError(f"sigma must be > 0, got {sigma}")
    x = _as_float_array(x)
    ax = np.abs(x)
    inner = ax <= sigma
    out = np.where(
        inner,
        x * x / (2.0 * sigma),
        sigma * np.log(np.where(inner, 1.0, ax / sigma)) + 0.5 * sigma,
    )
    return _scalar_like(x, out)


def x_psi_prime(x, sigma):
    """Derivative of :func:`x_psi`: 1/sigma inside, -sigma/x^2 outside.

    At the kinks |x| = sigma the inner-branch value 1/sigma is returned;
    the choice is measure-zero and keeps the function total.
    """
    if not (sigma > 0.0):
        raise InvalidParameterError(f"sigma must be > 0, got {sigma}")
    x = _as_float_array(x)
    inner = np.abs(x) <= sigma
    out = np.where(inner, 1.0 / sigma, -sigma / np.where(inner, 1.0, x * x))
    return _scalar_like(x, out)


class XPenalty(PenaltyFamily):
    """Redescending family parameterized by the noise scale sigma.

    The score depends on x only through x/sigma, so
    ``XPenalty(c * sigma).psi(c * x) == XPenalty(sigma).psi(x)``.
    By convention sigma is the total noise standard deviation of the
    operating model (1 in the unit-variance experiments); pass the
    background standard deviation instead to study the alternative.
    """

    def __init__(self, sigma: float):
        if not (sigma > 0.0):
            raise InvalidParameterError(f"sigma must be > 0, got {sigma}")
        self.sigma = float(sigma)
        self.kink_points = (-self.sigma, self.sigma)

    def rho(self, x):
        return x_rho(x, self.sigma)

    def psi(self, x):
        return x_psi(x, self.sigma)

    def psi_prime(self, x):
        return x_psi_prime(x, self.sigma)

    def __repr__(self):
        return f"XPenalty(sigma={self.sigma!r})"


class HuberThreshold(NamedTuple):
    """Solved clipping constant in background-standard-deviation units."""

    k: float
    capped: bool


def huber_threshold(epsilon: float) -> HuberThreshold:
    """Minimax clipping constant for contamination fraction ``epsilon``.

    Solves ``2 * (phi(k)/k - Q(k)) = eps / (1 - eps)`` by bisection; the
    left side is strictly decreasing in k, so the root is unique. For very
    small ``epsilon`` the root exceeds the cap 8, where clipping is
    numerically inert for unit-variance noise; the capped value is
    returned with ``capped=True``.
    """
    if not (0.0 < epsilon < 1.0):
        raise InvalidParameterError(f"epsilon must be in (0, 1), got {epsilon}")
    target = epsilon / (1.0 - epsilon)

    def residual(k):
        return 2.0 * (gaussian_pdf(k, 1.0) / k - q_function(k)) - target

    if residual(HUBER_THRESHOLD_CAP) >= 0.0:
        return HuberThreshold(k=HUBER_THRESHOLD_CAP, capped=True)
    lo = 1e-8
    while residual(lo) <= 0.0:  # enormous epsilon pushes the root toward 0
        lo *= 0.5
        if lo < 1e-300:
            raise InvalidParameterError(
                f"no Huber threshold bracket found for epsilon={epsilon}"
            )
    k = bisect(residual, lo, HUBER_THRESHOLD_CAP, tol=1e-12)
    return HuberThreshold(k=k, capped=False)


def minimax_penalty(noise: MixtureNoiseModel, scale: str = "total") -> HuberPenalty:
    """Huber baseline for a mixture model: gamma = k(epsilon) * noise std.

    ``scale`` selects which standard deviation multiplies the solved
    constant: ``"total"`` (default, matches the unit-total-variance
    experiment convention) or ``"nominal"`` (the background component).
    ``epsilon = 0`` falls back to the capped constant, making the penalty
    effectively quadratic over the relevant range.
    """
    if scale not in ("total", "nominal"):
        raise InvalidParameterError(f"scale must be 'total' or 'nominal', got {scale!r}")
    std = noise.total_std if scale == "total" else noise.nominal_std
    if noise.epsilon == 0.0:
        k = HUBER_THRESHOLD_CAP
    else:
        k = huber_threshold(noise.epsilon).k
    return HuberPenalty(gamma=k * std)


def x_penalty(noise: MixtureNoiseModel, scale: str = "total") -> XPenalty:
    """Redescending family tuned to a mixture model's standard deviation."""
    if scale not in ("total", "nominal"):
        raise InvalidParameterError(f"scale must be 'total' or 'nominal', got {scale!r}")
    std = noise.total_std if scale == "total" else noise.nominal_std
    return XPenalty(sigma=std)
