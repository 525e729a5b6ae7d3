import numpy as np
import pytest

from dislocwave.continuum import pde_evolve
from dislocwave.numerics import Grid1D
from dislocwave.solutions import KinkParams, kink_state


@pytest.fixture(scope="session")
def grid():
    return Grid1D(-30.0, 30.0, 2048)


@pytest.fixture(scope="session")
def kp():
    return KinkParams(mu=0.5, sign=1, x0=0.0, beta=1.0, delta=1.0)


@pytest.fixture(scope="session")
def kink0(grid, kp):
    return kink_state(grid, 0.0, kp)


@pytest.fixture(scope="session")
def short_run(kink0, kp):
    """Integrable kink run, T = 0.2, snapshots every 0.01."""
    return pde_evolve(kink0, kp.params(), dt=1e-4, n_steps=2000, stride=100)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
