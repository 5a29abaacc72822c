import numpy as np
import pytest

from dunklkit.grid import make_grid
from dunklkit.root_system import make_z2d
from dunklkit.transform import DunklTransform


@pytest.fixture(scope="session")
def g1_half():
    return make_z2d(1, [0.5])


@pytest.fixture(scope="session")
def g1_zero():
    return make_z2d(1, [0.0])


@pytest.fixture(scope="session")
def g2():
    return make_z2d(2, [1.0, 0.5])


@pytest.fixture(scope="session")
def tr1_half(g1_half):
    return DunklTransform(g1_half, make_grid(g1_half, n=192, length=11.0))


@pytest.fixture(scope="session")
def tr1_zero(g1_zero):
    return DunklTransform(g1_zero, make_grid(g1_zero, n=192, length=11.0))


@pytest.fixture(scope="session")
def tr2(g2_small):
    return DunklTransform(g2_small, make_grid(g2_small, n=48, length=7.0))


@pytest.fixture(scope="session")
def g2_small():
    return make_z2d(2, [0.25, 0.25])


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)
