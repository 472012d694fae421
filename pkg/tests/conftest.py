import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from numetric import freqdomain as fd
from numetric import plants as pl
from numetric.symbols import CDScalar, ExpSum

settings.register_profile("numetric", deadline=None, max_examples=30,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("numetric")


def scalar_on(grid, fn, symbol=None):
    """1x1 function on ``grid`` from a vectorised scalar callable."""
    sym = None
    if symbol is not None:
        sym = np.empty((1, 1), dtype=object)
        sym[0, 0] = symbol
    return fd.sample(grid, lambda x: np.asarray(fn(x), dtype=complex).reshape(-1, 1, 1), sym)


def ap_scalar(f: ExpSum, size=1024):
    return scalar_on(fd.grid_for(fd.AP, size), f, f)


def cd_scalar(F: CDScalar, size=1024):
    return scalar_on(fd.grid_for(fd.CD, size), F, F)


@pytest.fixture
def circle():
    return fd.circle_grid(1024)


@pytest.fixture
def inv_z():
    return pl.siso((1.0,), (0.0, 1.0))


@pytest.fixture
def const():
    return lambda k: pl.constant([[k]])
