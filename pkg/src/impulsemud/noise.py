"""Two-term Gaussian mixture ambient-noise model.

The channel noise is background Gaussian with variance ``nominal_variance``
that, with probability ``epsilon``, is replaced by an impulsive Gaussian
component whose variance is ``kappa`` times larger. The derived total
variance is ``(1 - eps) * nu2 + eps * kappa * nu2``; experiments hold it
fixed (usually at 1) while sweeping ``epsilon`` and ``kappa``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .numerics import gaussian_pdf


def _validate(epsilon: float, kappa: float, nominal_variance: float) -> None:
    if not (0.0 <= epsilon < 1.0):
        raise InvalidParameterError(f"epsilon must be in [0, 1), got {epsilon}")
    if not (kappa >= 1.0):
        raise InvalidParameterError(f"kappa must be >= 1, got {kappa}")
    if not (nominal_variance > 0.0):
        raise InvalidParameterError(
            f"nominal_variance must be > 0, got {nominal_variance}"
        )


@dataclass(frozen=True)
class MixtureNoiseModel:
    """Mixture of N(0, nu2) and N(0, kappa*nu2) with occurrence probability eps.

    ``kappa = 1`` is allowed and degenerates to a pure Gaussian regardless
    of ``epsilon``, which makes a useful boundary case.
    """

    epsilon: float
    kappa: float
    nominal_variance: float

    def __post_init__(self):
        _validate(self.epsilon, self.kappa, self.nominal_variance)

    @property
    def total_variance(self) -> float:
        return self.nominal_variance * ((1.0 - self.epsilon) + self.epsilon * self.kappa)

    @property
    def nominal_std(self) -> float:
        return math.sqrt(self.nominal_variance)

    @property
    def total_std(self) -> float:
        return math.sqrt(self.total_variance)

    @property
    def impulsive_variance(self) -> float:
        return self.kappa * self.nominal_variance

    def pdf(self, x):
        """Mixture density, even in x and integrating to 1."""
        background = gaussian_pdf(x, self.nominal_variance)
        if self.epsilon == 0.0:
            return background
        impulsive = gaussian_pdf(x, self.impulsive_variance)
        return (1.0 - self.epsilon) * background + self.epsilon * impulsive

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n i.i.d. samples using the caller's stream."""
        samples, _ = self.sample_with_branches(rng, n)
        return samples

    def sample_with_branches(self, rng: np.random.Generator, n: int):
        """Like :meth:`sample` but also returns the impulsive-branch mask.

        The mask exposes which draws came from the impulsive component so
        tests can check the branch fraction against ``epsilon``. Exactly one
        uniform and one normal variate are consumed per sample, making the
        draw deterministic given the stream state.
        """
        if n < 1:
            raise InvalidParameterError(f"n must be >= 1, got {n}")
        impulsive = rng.random(n) < self.epsilon
        scale = np.where(
            impulsive,
            math.sqrt(self.impulsive_variance),
            math.sqrt(self.nominal_variance),
        )
        return rng.standard_normal(n) * scale, impulsive


def calibrate(epsilon: float, kappa: float, total_variance: float) -> MixtureNoiseModel:
    """Build a model with the requested total variance.

    Solves ``nu2 = total_variance / ((1 - eps) + eps * kappa)`` so the
    derived total variance equals ``total_variance`` exactly.
    """
    if not (total_variance > 0.0):
        raise InvalidParameterError(
            f"total_variance must be > 0, got {total_variance}"
        )
    _validate(epsilon, kappa, 1.0)
    nominal = total_variance / ((1.0 - epsilon) + epsilon * kappa)
    return MixtureNoiseModel(epsilon, kappa, nominal)
