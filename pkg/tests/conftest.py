import numpy as np
import pytest

from potscat.fields import Grid
from potscat.potentials import gaussian_potential


@pytest.fixture
def grid2d():
    return Grid(dim=2, n=32, half_width=1.0)


@pytest.fixture
def grid3d():
    return Grid(dim=3, n=16, half_width=1.0)


@pytest.fixture
def gaussian2d(grid2d):
    # sigma small against the support radius so the mask jump is negligible
    return gaussian_potential(grid2d, amplitude=0.5, sigma=0.15, support_radius=0.9)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
