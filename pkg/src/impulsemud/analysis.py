"""Asymptotic performance of M-estimation detectors.

The large-sample variance of an M-estimate with score psi at noise density
f is V = int(psi^2 f) / [int(psi' f)]^2. For the redescending family the
two integrals have closed forms built from Gaussian tails and densities;
they are evaluated per mixture component and weighted. The numerator
closed form shipped here is the one that agrees with the quadrature oracle
(piecewise integration over the score kinks); the originally published
variant, which differs in the sign of one tail-term coefficient, is kept
behind ``verbatim_numerator`` for documentation runs.

Asymptotic relative efficiency (ARE) compares another detector to the
redescending one as V_other / V_x; values above 1 favor the latter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateScoreError, InvalidParameterError
from .noise import MixtureNoiseModel, calibrate
from .numerics import QuadratureSpec, integrate_piecewise, q_function
from .penalty import PenaltyFamily, minimax_penalty

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class AsymptoticVariance:
    """V = numerator / denominator_base**2 for one (score, noise) pair."""

    numerator: float
    denominator_base: float

    @property
    def value(self) -> float:
        return self.numerator / self.denominator_base**2


@dataclass(frozen=True)
class AreGrid:
    """ARE values over an (epsilon, kappa) grid, with both variances kept."""

    epsilons: np.ndarray
    kappas: np.ndarray
    values: np.ndarray  # shape (len(epsilons), len(kappas))
    v_x: np.ndarray
    v_other: np.ndarray

    def __post_init__(self):
        shape = (len(self.epsilons), len(self.kappas))
        for name in ("values", "v_x", "v_other"):
            arr = getattr(self, name)
            if arr.shape != shape:
                raise InvalidParameterError(
                    f"{name} has shape {arr.shape}, expected {shape}"
                )


def variance_quadrature(
    penalty: PenaltyFamily,
    noise: MixtureNoiseModel,
    spec: QuadratureSpec = QuadratureSpec(),
) -> AsymptoticVariance:
    """Asymptotic variance by adaptive quadrature (the oracle route).

    Integrands are split at the penalty's kink points before quadrature.
    """
    kinks = penalty.kink_points
    num = integrate_piecewise(
        lambda x: penalty.psi(x) ** 2 * noise.pdf(x),
        -np.inf,
        np.inf,
        spec,
        breakpoints=kinks,
    )
    den = integrate_piecewise(
        lambda x: penalty.psi_prime(x) * noise.pdf(x),
        -np.inf,
        np.inf,
        spec,
        breakpoints=kinks,
    )
    if abs(den) < 1e-12:
        raise DegenerateScoreError(
            f"score-derivative integral {den:.3e} is too small for {penalty!r}"
        )
    return AsymptoticVariance(numerator=num, denominator_base=den)


def _component_psi_squared(sigma: float, u2: float) -> float:
    """int psi^2 N(0, u2) for the redescending score with scale sigma."""
    u = math.sqrt(u2)
    a = sigma / u
    q = q_function(a)
    phi = math.exp(-0.5 * a * a) / _SQRT_2PI
    return (
        (u2 / sigma**2) * (1.0 - 2.0 * q)
        - (2.0 * u / sigma) * phi
        + (2.0 * sigma / u) * phi
        - (2.0 * sigma**2 / u2) * q
    )


def _component_psi_prime(sigma: float, u2: float) -> float:
    """int psi' N(0, u2) for the redescending score with scale sigma."""
    u = math.sqrt(u2)
    a = sigma / u
    q = q_function(a)
    phi = math.exp(-0.5 * a * a) / _SQRT_2PI
    return (
        1.0 / sigma
        - (2.0 / sigma) * q
        + (2.0 * sigma / u2) * q
        - (2.0 / u) * phi
    )


def _verbatim_numerator(sigma: float, noise: MixtureNoiseModel) -> float:
    """The originally published numerator form, transcribed as printed.

    Disagrees with the quadrature oracle: the coefficients of the two tail
    terms appear as differences (u^2/sigma^2 - sigma^2/u^2) where the
    piecewise integration gives sums. Kept only for documentation runs.
    """
    eps = noise.epsilon
    kappa = noise.kappa
    v2 = noise.nominal_variance
    v = math.sqrt(v2)
    s = sigma
    return 2.0 * (
        (v2 / (2.0 * s**2)) * (1.0 + (kappa - 1.0) * eps)
        - (v2 / s**2 - s**2 / v2) * (1.0 - eps) * q_function(s / v)
        - (kappa * v2 / s**2 - s**2 / (kappa * v2))
        * eps
        * q_function(s / (math.sqrt(kappa) * v))
        + (s / v - v / s) * ((1.0 - eps) / _SQRT_2PI) * math.exp(-(s**2) / (2.0 * v2))
        + (s / v - kappa * v / s)
        * (eps / math.sqrt(2.0 * math.pi * kappa))
        * math.exp(-(s**2) / (2.0 * kappa * v2))
    )


def x_variance_closed_form(
    sigma: float,
    noise: MixtureNoiseModel,
    verbatim_numerator: bool = False,
) -> AsymptoticVariance:
    """Closed-form asymptotic variance of the redescending detector.

    Both integrals are mixture-weighted sums of per-component primitives
    in Q(sigma/u) and the component density at sigma. The denominator
    matches the published form exactly; the default numerator is the
    corrected one (see module docstring).
    """
    if not (sigma > 0.0):
        raise InvalidParameterError(f"sigma must be > 0, got {sigma}")
    eps = noise.epsilon
    v2 = noise.nominal_variance
    k_v2 = noise.impulsive_variance
    den = (1.0 - eps) * _component_psi_prime(sigma, v2)
    if eps > 0.0:
        den += eps * _component_psi_prime(sigma, k_v2)
    if verbatim_numerator:
        num = _verbatim_numerator(sigma, noise)
    else:
        num = (1.0 - eps) * _component_psi_squared(sigma, v2)
        if eps > 0.0:
            num += eps * _component_psi_squared(sigma, k_v2)
    if abs(den) < 1e-12:
        raise DegenerateScoreError(f"closed-form denominator {den:.3e} is degenerate")
    return AsymptoticVariance(numerator=num, denominator_base=den)


def are(
    penalty_other: PenaltyFamily,
    noise: MixtureNoiseModel,
    spec: QuadratureSpec = QuadratureSpec(),
) -> float:
    """V_other / V_x at the given noise model.

    The reference variance V_x uses the closed form at sigma equal to the
    model's total standard deviation; V_other comes from quadrature.
    """
    v_other = variance_quadrature(penalty_other, noise, spec).value
    v_x = x_variance_closed_form(noise.total_std, noise).value
    return v_other / v_x


def are_grid(
    epsilons,
    kappas,
    total_variance: float = 1.0,
    *,
    verbatim_numerator: bool = False,
    huber_scale: str = "total",
    spec: QuadratureSpec = QuadratureSpec(),
) -> AreGrid:
    """ARE of the minimax detector to the redescending one over a grid.

    For each (epsilon, kappa) the noise is calibrated to ``total_variance``,
    the Huber baseline is built from epsilon (threshold scaled per
    ``huber_scale``), and the redescending scale is the total standard
    deviation.
    """
    epsilons = np.asarray(list(epsilons), dtype=float)
    kappas = np.asarray(list(kappas), dtype=float)
    if epsilons.size == 0 or kappas.size == 0:
        raise InvalidParameterError("epsilon and kappa lists must be non-empty")
    values = np.empty((epsilons.size, kappas.size))
    v_x = np.empty_like(values)
    v_other = np.empty_like(values)
    for i, eps in enumerate(epsilons):
        for j, kappa in enumerate(kappas):
            model = calibrate(eps, kappa, total_variance)
            huber = minimax_penalty(model, scale=huber_scale)
            vx = x_variance_closed_form(
                model.total_std, model, verbatim_numerator=verbatim_numerator
            ).value
            vo = variance_quadrature(huber, model, spec).value
            v_x[i, j] = vx
            v_other[i, j] = vo
            values[i, j] = vo / vx
    return AreGrid(epsilons=epsilons, kappas=kappas, values=values, v_x=v_x, v_other=v_other)
