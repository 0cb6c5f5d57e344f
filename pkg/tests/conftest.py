import numpy as np
import pytest

from app.schemas.driven_mode import DrivenModeConfig
from app.schemas.fermi import FermiConfig


@pytest.fixture
def tol():
    return 1e-12


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def small_fermi():
    """Few modes, cheap enough for the full-matrix paths."""
    return FermiConfig(modes_per_branch=2, photon_cutoff=1)


@pytest.fixture
def driven():
    return DrivenModeConfig()


def random_hermitian(rng, d, scale=1.0):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (A + A.conj().T) / 2
