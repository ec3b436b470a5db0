import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from ggl_solver.errors import DataValidationError
from ggl_solver.models.ensemble import GglParams, PrecisionEnsemble, ProblemData, group_view, inner

from tests.helpers import random_symmetric


def test_group_view_of_identity():
    x = PrecisionEnsemble.identity(2, 2)
    assert_array_equal(group_view(x, 0, 1), [0.0, 0.0])
    assert_array_equal(group_view(x, 0, 0), [1.0, 1.0])


def test_group_view_matches_blockwise_read():
    blocks = np.array([np.eye(3) for _ in range(3)])
    for k in range(3):
        blocks[k, 0, 1] = blocks[k, 1, 0] = k + 1
    x = PrecisionEnsemble(blocks)
    assert_array_equal(group_view(x, 0, 1), [1.0, 2.0, 3.0])
    assert_array_equal(group_view(x, 0, 1), [x.block(k)[0, 1] for k in range(3)])


def test_group_view_out_of_range():
    with pytest.raises(ValueError):
        group_view(PrecisionEnsemble.identity(2, 2), 0, 2)


def test_inner_products(rng):
    identity = PrecisionEnsemble.identity(2, 2)
    assert inner(identity, identity) == 4.0
    assert inner(PrecisionEnsemble.zeros(2, 2), identity) == 0.0

    x, y = random_symmetric(rng, 2, 3), random_symmetric(rng, 2, 3)
    expected = sum(x.blocks[k, i, j] * y.blocks[k, i, j] for k in range(2) for i in range(3) for j in range(3))
    assert_allclose(inner(x, y), expected, rtol=1e-14)


def test_inner_rejects_shape_mismatch():
    with pytest.raises(ValueError):
        inner(PrecisionEnsemble.identity(2, 2), PrecisionEnsemble.identity(2, 3))


def test_small_asymmetry_is_averaged():
    block = np.array([[1.0, 0.5], [0.5 + 1e-12, 1.0]])
    x = PrecisionEnsemble([block])
    assert x.blocks[0, 0, 1] == x.blocks[0, 1, 0]
    assert abs(x.blocks[0, 0, 1] - x.blocks[0, 1, 0]) <= 1e-12 * (1 + abs(x.blocks[0, 0, 1]))


def test_large_asymmetry_is_rejected():
    with pytest.raises(DataValidationError):
        PrecisionEnsemble([np.array([[1.0, 0.5], [0.4, 1.0]])])


def test_ensemble_is_read_only():
    x = PrecisionEnsemble.identity(1, 2)
    with pytest.raises(ValueError):
        x.blocks[0, 0, 0] = 5.0


def test_bad_shapes_and_values():
    with pytest.raises(ValueError):
        PrecisionEnsemble(np.zeros((2, 2, 3)))
    with pytest.raises(ValueError):
        PrecisionEnsemble([np.array([[np.nan, 0.0], [0.0, 1.0]])])


def test_arithmetic_and_norm(rng):
    x = random_symmetric(rng, 3, 4)
    assert_allclose((x + x - 2 * x).blocks, 0.0, atol=1e-15)
    assert_allclose((x / 2.0).blocks, 0.5 * x.blocks)
    assert_allclose((-x).blocks, -x.blocks)
    assert_allclose(x.norm() ** 2, inner(x, x), rtol=1e-12)


def test_with_upper_groups_mirrors_and_keeps_diagonal(rng):
    x = random_symmetric(rng, 2, 4)
    groups = rng.standard_normal(x.upper_groups().shape)
    y = x.with_upper_groups(groups)
    assert_array_equal(y.upper_groups(), groups)
    assert_array_equal(y.blocks, np.swapaxes(y.blocks, 1, 2))
    assert_array_equal(y.diagonal_groups(), x.diagonal_groups())


def test_params_validation_and_scaling():
    with pytest.raises(ValueError):
        GglParams(-1.0, 0.0)
    with pytest.raises(ValueError):
        GglParams(float('inf'), 0.0)
    params = GglParams(0.2, 0.1)
    assert params.scaled(10.0) == GglParams(2.0, 1.0)
    assert params.is_penalized
    assert not GglParams(0.0, 0.0).is_penalized
    assert params.to_dict() == {'lambda1': 0.2, 'lambda2': 0.1}


def test_problem_data_rejects_indefinite_covariance():
    with pytest.raises(DataValidationError):
        ProblemData([np.array([[1.0, 2.0], [2.0, 1.0]])])


def test_problem_data_accepts_singular_covariance():
    data = ProblemData([np.array([[1.0, 1.0], [1.0, 1.0]])], [1])
    assert data.k_classes == 1
    assert data.dim == 2
    assert data.max_offdiagonal() == 1.0


def test_problem_data_checks_sample_counts():
    with pytest.raises(DataValidationError):
        ProblemData(PrecisionEnsemble.identity(2, 2), [10])
