import numpy as np
import pytest

from impulsemud import build_spreading_matrix, calibrate, generate_m_sequence


@pytest.fixture(scope="session")
def s31():
    """31x5 shifted m-sequence signature matrix used throughout."""
    return build_spreading_matrix(generate_m_sequence(5), 5)


@pytest.fixture(scope="session")
def mixture_01_100():
    """Heavily impulsive mixture at unit total variance."""
    return calibrate(0.1, 100.0, 1.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
