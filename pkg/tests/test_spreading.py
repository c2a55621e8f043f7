import numpy as np
import pytest

from impulsemud import (
    InvalidParameterError,
    NonPrimitivePolynomialError,
    SpreadingMatrix,
    build_spreading_matrix,
    calibrate,
    generate_m_sequence,
    synthesize_received,
)
from impulsemud.montecarlo import frame_stream


class TestMSequence:
    def test_degree_five_length(self):
        seq = generate_m_sequence(5, taps=0b00101)
        assert len(seq) == 31

    def test_degree_five_chip_balance(self):
        seq = generate_m_sequence(5)
        assert seq.sum() == -1
        assert np.count_nonzero(seq == -1) == 16
        assert np.count_nonzero(seq == 1) == 15

    def test_degree_three_autocorrelation(self):
        seq = generate_m_sequence(3, taps=0b011)
        assert len(seq) == 7
        for shift in range(1, 7):
            assert int(np.dot(seq, np.roll(seq, shift))) == -1

    @pytest.mark.parametrize("degree", [3, 4, 5, 6])
    def test_two_valued_autocorrelation(self, degree):
        seq = generate_m_sequence(degree)
        n = len(seq)
        assert int(np.dot(seq, seq)) == n
        for shift in range(1, n):
            assert int(np.dot(seq, np.roll(seq, shift))) == -1

    def test_zero_seed_rejected(self):
        with pytest.raises(InvalidParameterError):
            generate_m_sequence(5, seed_state=0)

    def test_non_primitive_taps_detected(self):
        # x^4 + x^2 + 1 factors, so its register cycles early.
        with pytest.raises(NonPrimitivePolynomialError):
            generate_m_sequence(4, taps=0b0101)

    def test_taps_without_constant_term_rejected(self):
        with pytest.raises(InvalidParameterError):
            generate_m_sequence(4, taps=0b0110)

    def test_degree_range(self):
        with pytest.raises(InvalidParameterError):
            generate_m_sequence(1)
        with pytest.raises(InvalidParameterError):
            generate_m_sequence(17)

    def test_seed_shift_is_cyclic_rotation(self):
        base = generate_m_sequence(5)
        other = generate_m_sequence(5, seed_state=1)
        shifts = [
            k for k in range(31) if np.array_equal(np.roll(base, -k), other)
        ]
        assert len(shifts) == 1


class TestSpreadingMatrix:
    def test_shape_and_norms(self, s31):
        assert s31.entries.shape == (31, 5)
        norms = np.linalg.norm(s31.entries, axis=0)
        assert np.allclose(norms, 1.0, atol=1e-12)

    def test_pairwise_cross_correlation(self, s31):
        gram = s31.gram
        off = gram[~np.eye(5, dtype=bool)]
        assert np.allclose(off, -1.0 / 31.0, atol=1e-12)
        assert np.allclose(np.diag(gram), 1.0, atol=1e-12)

    def test_gram_invertible(self, s31):
        assert np.linalg.cond(s31.gram) < 2.0

    def test_single_user(self):
        s = build_spreading_matrix(generate_m_sequence(5), 1)
        assert s.entries.shape == (31, 1)
        assert np.linalg.norm(s.entries[:, 0]) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("degree", [3, 4, 5, 6])
    def test_cross_correlation_any_degree(self, degree):
        n = 2**degree - 1
        k = min(n, 4)
        s = build_spreading_matrix(generate_m_sequence(degree), k)
        gram = s.gram
        off = gram[~np.eye(k, dtype=bool)]
        assert np.allclose(off, -1.0 / n, atol=1e-12)

    def test_too_many_users(self):
        with pytest.raises(InvalidParameterError):
            build_spreading_matrix(generate_m_sequence(3), 8)

    def test_non_binary_base_rejected(self):
        with pytest.raises(InvalidParameterError):
            build_spreading_matrix(np.array([1, 2, -1]), 2)

    def test_entries_read_only(self, s31):
        with pytest.raises(ValueError):
            s31.entries[0, 0] = 5.0


class TestSynthesizeReceived:
    def test_noiseless_is_exact_signal(self, s31):
        amps = np.array([1.0, 2.0, 0.5, 1.5, 1.0])
        bits = np.array([1, -1, 1, 1, -1])
        frame = synthesize_received(s31, amps, bits, noise=None)
        assert np.array_equal(frame.theta, amps * bits)
        assert np.allclose(frame.received, s31.entries @ frame.theta, atol=0)

    def test_single_user_unit_column(self):
        entries = np.zeros((4, 1))
        entries[0, 0] = 1.0
        s = SpreadingMatrix(n_chips=4, n_users=1, entries=entries)
        frame = synthesize_received(s, [2.0], [-1], noise=None)
        assert np.allclose(frame.received, [-2.0, 0.0, 0.0, 0.0], atol=0)

    def test_linearity_in_theta(self, s31, mixture_01_100):
        amps = np.ones(5)
        bits_a = np.array([1, 1, -1, 1, -1])
        bits_b = np.array([-1, 1, 1, 1, 1])
        frame_a = synthesize_received(s31, amps, bits_a, mixture_01_100, frame_stream(9, 0, 0))
        frame_b = synthesize_received(s31, amps, bits_b, mixture_01_100, frame_stream(9, 0, 0))
        diff = frame_a.received - frame_b.received
        expected = s31.entries @ (frame_a.theta - frame_b.theta)
        assert np.allclose(diff, expected, atol=1e-12)

    def test_matched_filter_expectation(self, s31, mixture_01_100):
        bits = np.array([1, -1, 1, 1, -1])
        amps = np.ones(5)
        theta = amps * bits
        expected = theta[0] + (-1.0 / 31.0) * theta[1:].sum()
        n_frames = 10_000
        rng = np.random.default_rng(77)
        noise = mixture_01_100.sample(rng, 31 * n_frames).reshape(31, n_frames)
        received = (s31.entries @ theta)[:, None] + noise
        stats = s31.entries[:, 0] @ received
        se = np.sqrt(mixture_01_100.total_variance / n_frames)
        assert abs(stats.mean() - expected) <= 3.0 * se

    def test_dimension_mismatch(self, s31):
        with pytest.raises(InvalidParameterError):
            synthesize_received(s31, np.ones(4), np.ones(4, dtype=int), noise=None)

    def test_invalid_bits(self, s31):
        with pytest.raises(InvalidParameterError):
            synthesize_received(s31, np.ones(5), np.array([1, 1, 0, 1, 1]), noise=None)

    def test_rng_required_with_noise(self, s31, mixture_01_100):
        with pytest.raises(InvalidParameterError):
            synthesize_received(s31, np.ones(5), np.ones(5, dtype=int), mixture_01_100)
