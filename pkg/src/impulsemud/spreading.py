"""Spreading codes and received-frame synthesis.

Users are separated by cyclically shifted m-sequences: column k of the
signature matrix is the base sequence shifted by k chips and scaled to unit
norm. Shifted m-sequences have two-valued periodic correlation, so every
pair of distinct columns has inner product -1/N.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidParameterError, NonPrimitivePolynomialError
from .noise import MixtureNoiseModel

# One known primitive polynomial per degree. Bit i of the mask is the
# coefficient of x^i; the leading x^degree term is implicit. Any primitive
# polynomial of the same degree gives the same correlation structure; these
# defaults just make runs reproducible.
DEFAULT_TAPS = {
    2: 0b11,
    3: 0b011,
    4: 0b0011,
    5: 0b00101,
    6: 0b000011,
    7: 0b0000011,
    8: 0b00011101,
    9: 0b000010001,
    10: 0b0000001001,
    11: 0b00000000101,
    12: 0b000001010011,
    13: 0b0000000011011,
    14: 0b10001000000011,
    15: 0b000000000000011,
    16: 0b0001000000001011,
}


def generate_m_sequence(degree, taps=None, seed_state=None):
    """Full-period LFSR chip sequence of length 2**degree - 1, mapped to +-1.

    ``taps`` encodes the feedback polynomial (see ``DEFAULT_TAPS``); the
    register starts from ``seed_state`` (all ones by default). Bits map
    0 -> +1, 1 -> -1. A short period (non-primitive taps) is detected by
    checking that the register state does not recur early.
    """
    if not (2 <= degree <= 16):
        raise InvalidParameterError(f"degree must be in [2, 16], got {degree}")
    if taps is None:
        taps = DEFAULT_TAPS[degree]
    if not (0 < taps < (1 << degree)):
        raise InvalidParameterError(
            f"taps mask must fit in {degree} bits and be nonzero, got {taps:#b}"
        )
    if not (taps & 1):
        raise InvalidParameterError(
            f"taps mask must include the constant term (bit 0), got {taps:#b}"
        )
    if seed_state is None:
        seed_state = (1 << degree) - 1
    if not (0 < seed_state < (1 << degree)):
        raise InvalidParameterError(
            f"seed_state must be a nonzero {degree}-bit register, got {seed_state}"
        )

    period = (1 << degree) - 1
    state = seed_state
    bits = np.empty(period, dtype=np.int64)
    for i in range(period):
        bits[i] = state & 1
        feedback = bin(state & taps).count("1") & 1
        state = (state >> 1) | (feedback << (degree - 1))
        if state == seed_state and i < period - 1:
            raise NonPrimitivePolynomialError(
                f"taps {taps:#b} give period {i + 1} < {period}; "
                "polynomial is not primitive"
            )
    if state != seed_state:
        raise NonPrimitivePolynomialError(
            f"taps {taps:#b} did not return to the seed state after {period} steps"
        )
    return 1 - 2 * bits  # 0 -> +1, 1 -> -1


@dataclass(frozen=True)
class SpreadingMatrix:
    """N x K matrix whose columns are unit-norm user signatures."""

    n_chips: int
    n_users: int
    entries: np.ndarray

    def __post_init__(self):
        if self.entries.shape != (self.n_chips, self.n_users):
            raise InvalidParameterError(
                f"entries shape {self.entries.shape} does not match "
                f"({self.n_chips}, {self.n_users})"
            )
        norms = np.linalg.norm(self.entries, axis=0)
        if not np.all(np.abs(norms - 1.0) <= 1e-12):
            raise InvalidParameterError("signature columns must have unit norm")
        self.entries.setflags(write=False)

    @cached_property
    def gram(self) -> np.ndarray:
        """Signature correlation matrix S^T S (unit diagonal)."""
        return self.entries.T @ self.entries


@dataclass(frozen=True)
class Frame:
    """One synthesized symbol interval: theta = amplitudes * bits."""

    amplitudes: np.ndarray
    bits: np.ndarray
    theta: np.ndarray
    received: np.ndarray


def build_spreading_matrix(base, n_users) -> SpreadingMatrix:
    """Signature matrix from cyclic shifts 0..K-1 of a +-1 chip sequence."""
    base = np.asarray(base)
    n_chips = base.shape[0]
    if not (1 <= n_users <= n_chips):
        raise InvalidParameterError(
            f"n_users must be in [1, {n_chips}], got {n_users}"
        )
    if not np.all(np.abs(base) == 1):
        raise InvalidParameterError("base sequence must take values in {-1, +1}")
    columns = np.stack(
        [np.roll(base, -k) for k in range(n_users)], axis=1
    ).astype(float)
    columns /= np.sqrt(n_chips)
    return SpreadingMatrix(n_chips=n_chips, n_users=n_users, entries=columns)


def synthesize_received(
    s: SpreadingMatrix,
    amplitudes,
    bits,
    noise: MixtureNoiseModel | None,
    rng: np.random.Generator | None = None,
) -> Frame:
    """Received vector S @ (amplitudes * bits) + noise.

    ``noise=None`` is the noiseless hook: the received vector is exactly
    the signal part.
    """
    amplitudes = np.asarray(amplitudes, dtype=float)
    bits = np.asarray(bits)
    if amplitudes.shape != (s.n_users,) or bits.shape != (s.n_users,):
        raise InvalidParameterError(
            f"amplitudes and bits must have shape ({s.n_users},), got "
            f"{amplitudes.shape} and {bits.shape}"
        )
    if np.any(amplitudes <= 0.0):
        raise InvalidParameterError("amplitudes must be positive")
    if not np.all(np.abs(bits) == 1):
        raise InvalidParameterError("bits must take values in {-1, +1}")
    theta = amplitudes * bits
    received = s.entries @ theta
    if noise is not None:
        if rng is None:
            raise InvalidParameterError("rng is required when noise is given")
        received = received + noise.sample(rng, s.n_chips)
    return Frame(
        amplitudes=amplitudes,
        bits=np.asarray(bits, dtype=int),
        theta=theta,
        received=received,
    )
