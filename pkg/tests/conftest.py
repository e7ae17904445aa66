import numpy as np
import pytest

from src.sk_model import CouplingMatrix, generate_couplings


@pytest.fixture
def pair() -> CouplingMatrix:
    """Two ferromagnetically coupled spins, J = [[0, 1], [1, 0]]."""
    return CouplingMatrix.from_entries([[0.0, 1.0], [1.0, 0.0]])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def instance():
    """Factory for reproducible random instances."""

    def make(n: int, seed: int = 11) -> CouplingMatrix:
        return generate_couplings(n, seed)

    return make


class FixedUniform:
    """Stand-in random stream whose uniform draws are fixed in advance."""

    def __init__(self, *values: float):
        self.values = list(values)

    def random(self, size=None):
        if size is None:
            return self.values.pop(0)
        return np.array([self.values.pop(0) for _ in range(size)])


@pytest.fixture
def fixed_uniform():
    return FixedUniform


@pytest.fixture
def make_stats():
    """Factory for hand-made campaign cells."""
    from src.experiment import EnergyStats, Protocol

    def make(n, lam, h_n, tau=10.0):
        return EnergyStats(
            protocol=Protocol.FIXED_STARTS, n=n, lam=lam, nreal=5, starts_or_budget=5,
            runs=25, tau=tau, tau_stderr=0.1, h_n=h_n, h_n_stderr=None if h_n is None else 0.01,
        )

    return make
