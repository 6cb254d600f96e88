import numpy as np
import pytest

from contraction_lab.spectral import SpectralSpace, eigenvalue_family


@pytest.fixture
def bridge16():
    """Brownian-bridge spectrum, 16 modes, low block of size 1."""
    return SpectralSpace(eigenvalue_family("brownian_bridge", 16), 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
