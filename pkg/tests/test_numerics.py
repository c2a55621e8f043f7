import math

import numpy as np
import pytest

from impulsemud import (
    BracketingError,
    InvalidParameterError,
    QuadratureAccuracyError,
    QuadratureSpec,
    SingularMatrixError,
    bisect,
    gaussian_pdf,
    integrate,
    integrate_piecewise,
    q_function,
    solve_spd,
    x_psi,
)


def erf_series(x, terms=40):
    """Maclaurin series for erf, an oracle independent of scipy."""
    total = 0.0
    for n in range(terms):
        total += (-1) ** n * x ** (2 * n + 1) / (math.factorial(n) * (2 * n + 1))
    return 2.0 / math.sqrt(math.pi) * total


def q_oracle(x):
    return 0.5 * (1.0 - erf_series(x / math.sqrt(2.0)))


class TestQFunction:
    def test_zero(self):
        assert q_function(0.0) == pytest.approx(0.5, abs=1e-15)

    def test_tail_symmetry(self):
        assert q_function(2.3) + q_function(-2.3) == pytest.approx(1.0, abs=1e-14)

    def test_against_series_oracle(self):
        assert abs(q_function(1.0) - q_oracle(1.0)) <= 1e-12
        assert q_oracle(1.0) == pytest.approx(0.158655253931457, abs=1e-13)

    def test_monotone_decreasing(self):
        xs = np.linspace(-6, 6, 101)
        qs = q_function(xs)
        assert np.all(np.diff(qs) < 0)

    def test_matches_density_integral(self):
        spec = QuadratureSpec()
        for x in (-3.0, -1.0, 0.0, 1.0, 3.0):
            tail = integrate(lambda t: gaussian_pdf(t, 1.0), x, np.inf, spec)
            assert q_function(x) == pytest.approx(tail, abs=1e-10)

    def test_array_input(self):
        out = q_function(np.array([0.0, 1.0]))
        assert out.shape == (2,)


class TestGaussianPdf:
    def test_peak_value(self):
        assert gaussian_pdf(0.0, 1.0) == pytest.approx(1.0 / math.sqrt(2 * math.pi), abs=1e-15)

    def test_even(self):
        assert gaussian_pdf(1.7, 4.0) == gaussian_pdf(-1.7, 4.0)

    def test_normalization(self):
        total = integrate(lambda t: gaussian_pdf(t, 0.25), -np.inf, np.inf)
        assert total == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("bad", [0.0, -1.0])
    def test_invalid_variance(self, bad):
        with pytest.raises(InvalidParameterError):
            gaussian_pdf(1.0, bad)


class TestIntegrate:
    def test_gaussian_normalization(self):
        assert integrate(lambda t: gaussian_pdf(t, 1.0), -np.inf, np.inf) == pytest.approx(
            1.0, abs=1e-10
        )

    def test_second_moment(self):
        val = integrate(lambda t: t * t * gaussian_pdf(t, 1.0), -np.inf, np.inf)
        assert val == pytest.approx(1.0, abs=1e-10)

    def test_squared_score_against_piecewise_analytic(self):
        # Splitting at the score kinks and integrating each branch by hand
        # gives 1 - 4 Q(1) for sigma = 1 against the unit Gaussian.
        expected = 1.0 - 4.0 * q_function(1.0)
        val = integrate_piecewise(
            lambda t: x_psi(t, 1.0) ** 2 * gaussian_pdf(t, 1.0),
            -np.inf,
            np.inf,
            breakpoints=(-1.0, 1.0),
        )
        assert val == pytest.approx(expected, abs=1e-10)
        assert expected == pytest.approx(0.365378984274, abs=1e-9)

    @pytest.mark.parametrize("degree", [0, 1, 2, 3, 4])
    def test_polynomial_times_gaussian(self, degree):
        # Odd moments vanish; even moments are (d-1)!! for the unit Gaussian.
        val = integrate(lambda t: t**degree * gaussian_pdf(t, 1.0), -np.inf, np.inf)
        expected = {0: 1.0, 1: 0.0, 2: 1.0, 3: 0.0, 4: 3.0}[degree]
        assert val == pytest.approx(expected, abs=1e-9)

    def test_budget_exhausted_carries_estimate(self):
        spec = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-12, max_subdivisions=1)
        with pytest.raises(QuadratureAccuracyError) as err:
            integrate(lambda t: math.cos(50.0 * t), 0.0, 10.0, spec)
        assert math.isfinite(err.value.estimate)
        assert err.value.error_bound > 0

    def test_spec_validation(self):
        with pytest.raises(InvalidParameterError):
            QuadratureSpec(abs_tol=0.0)
        with pytest.raises(InvalidParameterError):
            QuadratureSpec(max_subdivisions=0)


class TestSolveSpd:
    def test_identity(self):
        y = np.arange(1.0, 6.0)
        assert np.allclose(solve_spd(np.eye(5), y), y, atol=1e-14)

    def test_diagonal(self):
        assert np.allclose(solve_spd(np.diag([2.0, 4.0]), [2.0, 8.0]), [1.0, 2.0])

    def test_gram_round_trip(self, s31):
        e1 = np.zeros(5)
        e1[0] = 1.0
        z = solve_spd(s31.gram, e1)
        assert np.linalg.norm(s31.gram @ z - e1) <= 1e-10

    def test_random_spd_round_trip(self, rng):
        for k in (2, 8, 17, 32):
            a = rng.standard_normal((k, k))
            m = a @ a.T + 0.5 * np.eye(k)
            y = rng.standard_normal(k)
            z = solve_spd(m, y)
            assert np.linalg.norm(m @ z - y) <= 1e-10 * np.linalg.norm(y)

    def test_multiple_right_hand_sides(self, rng):
        a = rng.standard_normal((6, 6))
        m = a @ a.T + np.eye(6)
        y = rng.standard_normal((6, 3))
        z = solve_spd(m, y)
        assert np.linalg.norm(m @ z - y) <= 1e-10 * np.linalg.norm(y)

    def test_indefinite_matrix_names_pivot(self):
        m = np.diag([1.0, -1.0, 2.0])
        with pytest.raises(SingularMatrixError) as err:
            solve_spd(m, np.ones(3))
        assert err.value.pivot == 1
        assert "pivot 1" in str(err.value)

    def test_asymmetric_rejected(self):
        m = np.array([[1.0, 0.5], [0.0, 1.0]])
        with pytest.raises(InvalidParameterError):
            solve_spd(m, np.ones(2))


class TestBisect:
    def test_linear_root(self):
        assert bisect(lambda x: x - 2.0, 0.0, 5.0, 1e-10) == pytest.approx(2.0, abs=1e-9)

    def test_sqrt_two(self):
        root = bisect(lambda x: x * x - 2.0, 1.0, 2.0, 1e-12)
        assert root == pytest.approx(math.sqrt(2.0), abs=1e-11)

    def test_no_sign_change(self):
        with pytest.raises(BracketingError):
            bisect(lambda x: x * x + 1.0, -1.0, 1.0, 1e-8)

    def test_endpoint_root(self):
        assert bisect(lambda x: x, 0.0, 1.0, 1e-8) == 0.0

    def test_bad_tol(self):
        with pytest.raises(InvalidParameterError):
            bisect(lambda x: x, -1.0, 1.0, 0.0)
