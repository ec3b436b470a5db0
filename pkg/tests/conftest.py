import numpy as np
import pytest

from ggl_solver.models.ensemble import PrecisionEnsemble, ProblemData

from tests.helpers import random_problem


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def identity_problem():
    return ProblemData(PrecisionEnsemble.identity(3, 6))


@pytest.fixture
def small_problem(rng):
    return random_problem(rng, 2, 5)
