"""M-estimation multiuser detector.

The estimate minimizes sum_j rho(r_j - (S theta)_j). Starting from the
decorrelating (least-squares) estimate, a damped Newton step

    theta <- theta + mu * (S^T S)^{-1} S^T psi(r - S theta)

ascends the residual score, which descends the objective: the objective
gradient is -S^T psi(r - S theta), so the step direction has negative
inner product with the gradient whenever the score is nonzero. With
mu * sup psi' <= 1 the descent lemma gives a guaranteed decrease of at
least mu * (1 - mu * sup(psi') / 2) * psi^T P psi per step (P the
projection onto the signature span), so the iteration is monotone and
converges to a stationary point of the estimating equations
S^T psi(r - S theta) = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, NumericError
from .numerics import cholesky_factor, solve_cholesky
from .penalty import HuberPenalty, LsPenalty, PenaltyFamily, XPenalty
from .spreading import SpreadingMatrix


@dataclass(frozen=True)
class SolverConfig:
    """Step size, iteration cap, and stationarity threshold."""

    step_size: float
    max_iterations: int = 100
    stationarity_tol: float = 1e-8

    def __post_init__(self):
        if not (self.step_size > 0.0):
            raise InvalidParameterError(f"step_size must be > 0, got {self.step_size}")
        if self.max_iterations < 1:
            raise InvalidParameterError(
                f"max_iterations must be >= 1, got {self.max_iterations}"
            )
        if not (self.stationarity_tol > 0.0):
            raise InvalidParameterError(
                f"stationarity_tol must be > 0, got {self.stationarity_tol}"
            )


def default_config(penalty: PenaltyFamily, n_users: int) -> SolverConfig:
    """Defaults: mu = sigma for the redescending family (mu * sup psi' = 1),
    mu = 1 otherwise; tolerance scaled with dimension."""
    step = penalty.sigma if isinstance(penalty, XPenalty) else 1.0
    return SolverConfig(
        step_size=step,
        max_iterations=100,
        stationarity_tol=1e-8 * math.sqrt(n_users),
    )


@dataclass(frozen=True)
class DetectionResult:
    """Estimated theta, decided bits, and solver diagnostics."""

    theta_hat: np.ndarray
    bits: np.ndarray
    iterations: int
    converged: bool
    objective_trace: np.ndarray


def decorrelate(s: SpreadingMatrix, r: np.ndarray) -> np.ndarray:
    """Least-squares estimate (S^T S)^{-1} S^T r.

    Used both as the linear decorrelating detector and as the iteration
    warm start. ``r`` may be a single vector (N,) or a batch (N, B).
    """
    r = np.asarray(r, dtype=float)
    factor = cholesky_factor(s.gram)
    return solve_cholesky(factor, s.entries.T @ r)


def decide_bits(theta_hat: np.ndarray) -> np.ndarray:
    """Sign decisions; exact zeros decide +1 so runs stay reproducible."""
    theta_hat = np.asarray(theta_hat)
    return np.where(theta_hat < 0.0, -1, 1)


def m_estimate_batch(
    s: SpreadingMatrix,
    r: np.ndarray,
    penalty: PenaltyFamily,
    config: SolverConfig | None = None,
):
    """Vectorized M-estimation over a batch of received vectors.

    ``r`` has shape (N, B). Returns ``(theta, iterations, converged)`` with
    shapes (K, B), (B,), (B,). Columns stop updating once their residual
    score S^T psi(residual) falls below the stationarity tolerance in the
    max norm, so each column's trajectory is independent of the rest of
    the batch. The warm start already solves the quadratic case, hence the
    least-squares penalty converges without correction steps.
    """
    r = np.asarray(r, dtype=float)
    single = r.ndim == 1
    if single:
        r = r[:, None]
    if r.shape[0] != s.n_chips:
        raise InvalidParameterError(
            f"received vector length {r.shape[0]} does not match N={s.n_chips}"
        )
    if config is None:
        config = default_config(penalty, s.n_users)
    if not np.all(np.isfinite(r)):
        raise NumericError("received vector contains non-finite values")

    factor = cholesky_factor(s.gram)
    gram_inv = solve_cholesky(factor, np.eye(s.n_users))
    theta = solve_cholesky(factor, s.entries.T @ r)
    score = s.entries.T @ penalty.psi(r - s.entries @ theta)

    n_batch = r.shape[1]
    iterations = np.zeros(n_batch, dtype=int)
    converged = np.max(np.abs(score), axis=0) <= config.stationarity_tol

    # Work on the shrinking set of unconverged columns only; each column's
    # trajectory depends on its own data alone, so compaction changes
    # nothing but the cost.
    active = np.flatnonzero(~converged)
    r_act = r[:, active]
    theta_act = theta[:, active]
    score_act = score[:, active]
    for step in range(1, config.max_iterations + 1):
        if active.size == 0:
            break
        theta_act = theta_act + config.step_size * (gram_inv @ score_act)
        score_act = s.entries.T @ penalty.psi(r_act - s.entries @ theta_act)
        if not np.all(np.isfinite(score_act)):
            raise NumericError("residual score became non-finite")
        iterations[active] = step
        done = np.max(np.abs(score_act), axis=0) <= config.stationarity_tol
        if np.any(done):
            theta[:, active[done]] = theta_act[:, done]
            converged[active[done]] = True
            keep = ~done
            active = active[keep]
            r_act = r_act[:, keep]
            theta_act = theta_act[:, keep]
            score_act = score_act[:, keep]
    theta[:, active] = theta_act  # columns that hit the iteration cap

    if single:
        return theta[:, 0], int(iterations[0]), bool(converged[0])
    return theta, iterations, converged


def m_estimate(
    s: SpreadingMatrix,
    r: np.ndarray,
    penalty: PenaltyFamily,
    config: SolverConfig | None = None,
) -> DetectionResult:
    """Single-frame M-estimation with an objective trace.

    The trace records sum_j rho(residual_j) at the warm start and after
    every correction step; it is non-increasing by construction of the
    damped step.
    """
    r = np.asarray(r, dtype=float)
    if r.ndim != 1:
        raise InvalidParameterError(f"expected a single received vector, got shape {r.shape}")
    if config is None:
        config = default_config(penalty, s.n_users)
    if not np.all(np.isfinite(r)):
        raise NumericError("received vector contains non-finite values")

    factor = cholesky_factor(s.gram)
    gram_inv = solve_cholesky(factor, np.eye(s.n_users))
    theta = solve_cholesky(factor, s.entries.T @ r)
    residual = r - s.entries @ theta
    score = s.entries.T @ penalty.psi(residual)
    trace = [float(np.sum(penalty.rho(residual)))]

    iterations = 0
    converged = float(np.max(np.abs(score))) <= config.stationarity_tol
    while not converged and iterations < config.max_iterations:
        theta = theta + config.step_size * (gram_inv @ score)
        residual = r - s.entries @ theta
        score = s.entries.T @ penalty.psi(residual)
        if not np.all(np.isfinite(score)):
            raise NumericError("residual score became non-finite")
        trace.append(float(np.sum(penalty.rho(residual))))
        iterations += 1
        converged = float(np.max(np.abs(score))) <= config.stationarity_tol

    return DetectionResult(
        theta_hat=theta,
        bits=decide_bits(theta),
        iterations=iterations,
        converged=converged,
        objective_trace=np.asarray(trace),
    )


def detect(
    s: SpreadingMatrix,
    r: np.ndarray,
    penalty: PenaltyFamily,
    config: SolverConfig | None = None,
) -> DetectionResult:
    """M-estimate followed by sign decisions."""
    return m_estimate(s, r, penalty, config)
