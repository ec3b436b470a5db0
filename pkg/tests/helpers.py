"""Random instances shared by the test modules."""

import numpy as np

from ggl_solver.models.ensemble import PrecisionEnsemble, ProblemData


def random_symmetric(rng: np.random.Generator, k_classes: int, dim: int, scale: float = 1.0) -> PrecisionEnsemble:
    a = scale * rng.standard_normal((k_classes, dim, dim))
    return PrecisionEnsemble(0.5 * (a + np.swapaxes(a, 1, 2)))


def random_spd(rng: np.random.Generator, k_classes: int, dim: int) -> PrecisionEnsemble:
    a = rng.standard_normal((k_classes, dim, dim))
    return PrecisionEnsemble(a @ np.swapaxes(a, 1, 2) / dim + np.eye(dim))


def random_problem(rng: np.random.Generator, k_classes: int, dim: int, n: int = 200) -> ProblemData:
    """Sample covariances of n correlated Gaussian draws per class."""
    mixing = np.eye(dim) + 0.3 * rng.standard_normal((dim, dim))
    covariances = []
    for _ in range(k_classes):
        draws = rng.standard_normal((n, dim)) @ (mixing + 0.1 * rng.standard_normal((dim, dim))).T
        covariance = draws.T @ draws / n
        covariances.append(0.5 * (covariance + covariance.T))
    return ProblemData(np.array(covariances), [n] * k_classes)
