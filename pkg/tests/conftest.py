import warnings

import numpy as np
import pytest

from nlsq import ModelParams, cartesian, radial, solve_free_soliton


@pytest.fixture(autouse=True)
def _quiet_solver_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        yield


@pytest.fixture(scope="session")
def soliton_n1():
    """systemq2, n = 1, kappa = 2 on a fine periodic line."""
    g = cartesian(("x", 32, 1024))
    return solve_free_soliton(ModelParams(1, 2.0, "none"), "systemq2", g)


@pytest.fixture(scope="session")
def soliton_n4():
    g = radial(10, 1024, 4)
    return solve_free_soliton(ModelParams(4, 0.5, "none"), "systemq2", g)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
