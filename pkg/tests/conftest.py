import numpy as np
import pytest

from discordlab.states import ket_to_dm, random_state


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def hh():
    return ket_to_dm([1, 0, 0, 0])


@pytest.fixture
def vv():
    return ket_to_dm([0, 0, 0, 1])


def hs_states(n, seed=0):
    rng = np.random.default_rng(seed)
    return [random_state(rng) for _ in range(n)]


def pauli_trace(rho, a, b):
    """Tr[rho (a x b)] by explicit Kronecker product (test oracle)."""
    return np.trace(rho @ np.kron(a, b))
