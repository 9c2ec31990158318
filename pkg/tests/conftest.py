import numpy as np
import pytest

from inpaint_opt import Image, SolverParams, make_corpus


@pytest.fixture(scope="session")
def corpus64():
    return make_corpus(64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def random_image(rng):
    def make(n_y=8, n_x=8, channels=1):
        return Image(rng.random((n_y, n_x, channels)))
    return make


@pytest.fixture(scope="session")
def tight_solver():
    return SolverParams(rel_tolerance=1e-12)
