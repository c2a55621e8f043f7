"""Exception types shared across the toolkit."""


class ImpulseMudError(Exception):
    """Base class for all toolkit errors."""


class InvalidParameterError(ImpulseMudError, ValueError):
    """A parameter is outside its documented range."""


class SingularMatrixError(ImpulseMudError, ArithmeticError):
    """A matrix expected to be positive definite is not.

    Attributes
    ----------
    pivot : int or None
        Index of the first failing Cholesky pivot, when known.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class QuadratureAccuracyError(ImpulseMudError, ArithmeticError):
    """Adaptive quadrature exhausted its budget before meeting tolerance.

    Carries the best available estimate and its error bound.
    """

    def __init__(self, message, estimate, error_bound):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class BracketingError(ImpulseMudError, ValueError):
    """A root bracket does not contain a sign change."""


class NonPrimitivePolynomialError(ImpulseMudError, ValueError):
    """LFSR taps failed the full-period (primitivity) check."""


class DegenerateScoreError(ImpulseMudError, ArithmeticError):
    """The score-derivative integral is too close to zero to form a variance."""


class NumericError(ImpulseMudError, ArithmeticError):
    """Non-finite values appeared where finite ones are required."""
