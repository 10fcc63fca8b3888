import numpy as np
import pytest

from vhed.grid import make_grid


@pytest.fixture(scope="session")
def grid64():
    return make_grid(2.0, 6)


@pytest.fixture(scope="session")
def grid128():
    return make_grid(2.0, 7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
