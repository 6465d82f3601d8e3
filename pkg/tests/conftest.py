import numpy as np
import pytest

from acmp import fock


def random_wavefunction(n, N, seed):
    """Normalized random state in the (n, N) sector."""
    basis = fock.DeterminantBasis(n, N)
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal(len(basis))
    return fock.Wavefunction(basis, coeffs / np.linalg.norm(coeffs))


@pytest.fixture
def rng():
    return np.random.default_rng(0)
