import warnings

import numpy as np
import pytest

warnings.filterwarnings("ignore", message="The TBB threading layer")

from wavesieve.hyperbolic import DEFAULT_GRID, WIDE_GRID, make_grid  # noqa: E402


@pytest.fixture(scope="session")
def default_grid():
    return make_grid(DEFAULT_GRID)


@pytest.fixture(scope="session")
def wide_grid():
    return make_grid(WIDE_GRID)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
