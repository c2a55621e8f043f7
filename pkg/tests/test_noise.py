import math

import numpy as np
import pytest

from impulsemud import (
    InvalidParameterError,
    MixtureNoiseModel,
    QuadratureSpec,
    calibrate,
    gaussian_pdf,
    integrate,
)


class TestCalibrate:
    def test_pure_gaussian(self):
        model = calibrate(0.0, 100.0, 1.0)
        assert model.nominal_variance == pytest.approx(1.0, abs=1e-15)
        assert model.total_variance == pytest.approx(1.0, abs=1e-15)

    def test_one_percent_contamination(self):
        model = calibrate(0.01, 100.0, 1.0)
        assert model.nominal_variance == pytest.approx(1.0 / 1.99, rel=1e-14)

    def test_ten_percent_contamination(self):
        model = calibrate(0.1, 100.0, 1.0)
        assert model.nominal_variance == pytest.approx(1.0 / 10.9, rel=1e-14)

    @pytest.mark.parametrize("eps", [0.0, 0.001, 0.01, 0.1, 0.3])
    @pytest.mark.parametrize("kappa", [1.0, 10.0, 50.0, 100.0, 1000.0])
    def test_round_trip(self, eps, kappa):
        for target in (0.25, 1.0, 7.5):
            model = calibrate(eps, kappa, target)
            assert model.total_variance == pytest.approx(target, rel=1e-14)

    @pytest.mark.parametrize(
        "eps,kappa,total",
        [(1.0, 100.0, 1.0), (-0.1, 100.0, 1.0), (0.1, 0.5, 1.0), (0.1, 100.0, 0.0)],
    )
    def test_invalid_parameters(self, eps, kappa, total):
        with pytest.raises(InvalidParameterError):
            calibrate(eps, kappa, total)


class TestPdf:
    def test_degenerate_mixture_is_gaussian(self):
        model = MixtureNoiseModel(0.0, 100.0, 0.7)
        xs = np.linspace(-4, 4, 23)
        assert np.allclose(model.pdf(xs), gaussian_pdf(xs, 0.7), atol=1e-16)

    def test_kappa_one_is_gaussian(self):
        model = MixtureNoiseModel(0.3, 1.0, 0.5)
        xs = np.linspace(-3, 3, 11)
        assert np.allclose(model.pdf(xs), gaussian_pdf(xs, 0.5), atol=1e-16)

    def test_symmetry(self):
        model = calibrate(0.1, 100.0, 1.0)
        assert model.pdf(2.5) == model.pdf(-2.5)

    def test_normalization_by_quadrature(self):
        model = calibrate(0.1, 100.0, 1.0)
        assert model.nominal_variance == pytest.approx(1.0 / 10.9, rel=1e-12)
        total = integrate(model.pdf, -np.inf, np.inf)
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_nonnegative(self):
        model = calibrate(0.2, 50.0, 2.0)
        xs = np.linspace(-20, 20, 401)
        assert np.all(model.pdf(xs) >= 0.0)

    @pytest.mark.parametrize("eps,kappa", [(0.01, 10.0), (0.1, 100.0), (0.3, 1000.0)])
    def test_second_moment_matches_total_variance(self, eps, kappa):
        model = calibrate(eps, kappa, 1.0)
        spec = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-12, max_subdivisions=400)
        second = integrate(lambda x: x * x * model.pdf(x), -np.inf, np.inf, spec)
        assert second == pytest.approx(model.total_variance, rel=1e-8)


class TestSampling:
    def test_pure_gaussian_variance(self):
        model = MixtureNoiseModel(0.0, 1.0, 0.8)
        rng = np.random.default_rng(7)
        x = model.sample(rng, 1_000_000)
        assert np.var(x) == pytest.approx(0.8, rel=0.01)

    def test_mixture_variance(self):
        model = calibrate(0.1, 100.0, 1.0)
        rng = np.random.default_rng(11)
        x = model.sample(rng, 1_000_000)
        assert np.var(x) == pytest.approx(1.0, rel=0.02)

    def test_branch_fraction(self):
        model = calibrate(0.1, 100.0, 1.0)
        rng = np.random.default_rng(3)
        n = 1_000_000
        _, impulsive = model.sample_with_branches(rng, n)
        bound = 3.0 * math.sqrt(0.1 * 0.9 / n)
        assert abs(impulsive.mean() - 0.1) <= bound

    def test_deterministic_given_stream(self):
        model = calibrate(0.05, 10.0, 1.0)
        a = model.sample(np.random.default_rng(42), 64)
        b = model.sample(np.random.default_rng(42), 64)
        assert np.array_equal(a, b)

    def test_sample_count_validation(self):
        model = calibrate(0.05, 10.0, 1.0)
        with pytest.raises(InvalidParameterError):
            model.sample(np.random.default_rng(0), 0)
