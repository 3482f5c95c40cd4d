import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_hermitian(rng, m):
    X = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return 0.5 * (X + X.conj().T)


def wishart(rng, m, n):
    """Well-conditioned random PD Hermitian matrix from n complex samples."""
    X = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
    return X.T @ X.conj() / n
