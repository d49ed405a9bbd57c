import os

import numpy as np
import pytest

# Share eigensolve/constants caches across test runs so the expensive H^1
# spectral work happens once.
_CACHE = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", ".cache")
os.environ.setdefault("GROUPSAMPLE_CACHE", os.path.abspath(_CACHE))
os.makedirs(os.environ["GROUPSAMPLE_CACHE"], exist_ok=True)


@pytest.fixture(scope="session")
def cache_dir():
    return os.environ["GROUPSAMPLE_CACHE"]


@pytest.fixture(scope="session")
def h1_grid():
    from groupsample import HeisenbergModel, Grid

    model = HeisenbergModel()
    return Grid.regular(model, [-7.0] * 3, [7.0] * 3, (33, 33, 33))


@pytest.fixture(scope="session")
def h1_proj(h1_grid, cache_dir):
    from groupsample import sublaplacian_spectrum

    return sublaplacian_spectrum(h1_grid, 1.0, cache_dir=cache_dir)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(0)
