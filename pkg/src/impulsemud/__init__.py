"""Robust M-estimation multiuser detection in impulsive Gaussian-mixture noise.

A desk-scale toolkit for synchronous DS-CDMA: m-sequence spreading codes,
a two-term Gaussian-mixture channel, M-estimation detectors (least
squares, Huber minimax, and a redescending score), their asymptotic
efficiency analysis, and a reproducible Monte Carlo BER engine.
"""

__version__ = "0.1.0"

from .analysis import (
    AreGrid,
    AsymptoticVariance,
    are,
    are_grid,
    variance_quadrature,
    x_variance_closed_form,
)
from .detector import (
    DetectionResult,
    SolverConfig,
    decide_bits,
    decorrelate,
    default_config,
    detect,
    m_estimate,
    m_estimate_batch,
)
from .errors import (
    BracketingError,
    DegenerateScoreError,
    ImpulseMudError,
    InvalidParameterError,
    NonPrimitivePolynomialError,
    NumericError,
    QuadratureAccuracyError,
    SingularMatrixError,
)
from .montecarlo import (
    BerPoint,
    ExperimentSpec,
    frame_stream,
    run_ber_point,
    snr_to_amplitude,
    sweep,
)
from .noise import MixtureNoiseModel, calibrate
from .numerics import (
    QuadratureSpec,
    bisect,
    gaussian_pdf,
    integrate,
    integrate_piecewise,
    q_function,
    solve_spd,
)
from .penalty import (
    HuberPenalty,
    HuberThreshold,
    LsPenalty,
    PenaltyFamily,
    XPenalty,
    huber_threshold,
    minimax_penalty,
    x_penalty,
    x_psi,
    x_psi_prime,
    x_rho,
)
from .spreading import (
    Frame,
    SpreadingMatrix,
    build_spreading_matrix,
    generate_m_sequence,
    synthesize_received,
)

__all__ = [
    "__version__",
    "AreGrid",
    "AsymptoticVariance",
    "BerPoint",
    "BracketingError",
    "DegenerateScoreError",
    "DetectionResult",
    "ExperimentSpec",
    "Frame",
    "HuberPenalty",
    "HuberThreshold",
    "ImpulseMudError",
    "InvalidParameterError",
    "LsPenalty",
    "MixtureNoiseModel",
    "NonPrimitivePolynomialError",
    "NumericError",
    "PenaltyFamily",
    "QuadratureAccuracyError",
    "QuadratureSpec",
    "SingularMatrixError",
    "SolverConfig",
    "SpreadingMatrix",
    "XPenalty",
    "are",
    "are_grid",
    "bisect",
    "build_spreading_matrix",
    "calibrate",
    "decide_bits",
    "decorrelate",
    "default_config",
    "detect",
    "frame_stream",
    "gaussian_pdf",
    "generate_m_sequence",
    "huber_threshold",
    "integrate",
    "integrate_piecewise",
    "m_estimate",
    "m_estimate_batch",
    "minimax_penalty",
    "q_function",
    "run_ber_point",
    "snr_to_amplitude",
    "solve_spd",
    "sweep",
    "synthesize_received",
    "variance_quadrature",
    "x_penalty",
    "x_psi",
    "x_psi_prime",
    "x_rho",
    "x_variance_closed_form",
]
