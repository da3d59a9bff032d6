import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fracspace.grid import GridFunction, GridSpec

settings.register_profile(
    "fracspace", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("fracspace")


@pytest.fixture
def grid1d():
    return GridSpec((256,), (2 * math.pi,))


@pytest.fixture
def grid2d():
    return GridSpec((32, 32), (8.0, 8.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_function(grid, rng, complex_=False):
    vals = rng.standard_normal(grid.dims)
    if complex_:
        vals = vals + 1j * rng.standard_normal(grid.dims)
    return GridFunction(grid, vals)
