import numpy as np
import pytest
from numpy.testing import assert_allclose

from ggl_solver.models.ensemble import PrecisionEnsemble
from ggl_solver.services.datagen import gen_nn_network
from ggl_solver.services.evalmetrics import count_edges, differential_edges, distance_series, edge_report, nnz_density, relative_distance, sse

from tests.helpers import random_spd, random_symmetric


def _ensemble(*entries, k_classes=1, dim=3):
    """Identity blocks with the given (k, i, j, value) off-diagonal entries."""
    blocks = np.array([np.eye(dim) for _ in range(k_classes)])
    for k, i, j, value in entries:
        blocks[k, i, j] = blocks[k, j, i] = value
    return PrecisionEnsemble(blocks)


def test_edge_counts_hand_case():
    truth = _ensemble((0, 0, 1, 0.5))
    estimate = _ensemble((0, 0, 1, 0.4), (0, 1, 2, 0.3))
    assert count_edges(estimate, truth) == [(1, 1, 0)]
    assert_allclose(sse(estimate, truth), 0.1**2 + 0.3**2, rtol=1e-14)


def test_diagonal_estimate_selects_nothing():
    truth = gen_nn_network(12, 2, seed=2)
    counts = count_edges(PrecisionEnsemble.identity(2, 12), truth)
    assert [c.tp for c in counts] == [0, 0]
    assert [c.fp for c in counts] == [0, 0]
    assert [c.fn for c in counts] == truth.edge_counts()


def test_tiny_values_are_not_edges():
    truth = _ensemble((0, 0, 1, 0.5))
    assert count_edges(_ensemble((0, 0, 1, 1e-11)), truth) == [(0, 0, 1)]


def test_sse_counts_each_pair_once():
    delta = 0.25
    truth = PrecisionEnsemble.identity(2, 2)
    assert_allclose(sse(_ensemble((1, 0, 1, delta), k_classes=2, dim=2), truth), delta**2, rtol=1e-14)


def test_sse_matches_double_loop(rng):
    estimate, truth = random_symmetric(rng, 3, 5), random_symmetric(rng, 3, 5)
    expected = sum((estimate.blocks[k, i, j] - truth.blocks[k, i, j]) ** 2 for k in range(3) for i in range(5) for j in range(i + 1, 5))
    assert_allclose(sse(estimate, truth), expected, rtol=1e-12)


def test_differential_edges():
    truth = _ensemble((0, 0, 1, 0.5), (1, 0, 1, 0.5), k_classes=2)
    estimate = _ensemble((0, 0, 1, 2e-6), (1, 0, 1, 5e-7), k_classes=2)
    assert differential_edges(estimate, truth) == [(0, 1)]

    truth = _ensemble((0, 0, 1, 0.5), k_classes=2)
    assert differential_edges(estimate, truth) == [(1, 0)]
    assert differential_edges(truth, truth) == [(1, 0)]


def test_differential_edges_need_two_classes():
    with pytest.raises(ValueError):
        differential_edges(PrecisionEnsemble.identity(1, 3), PrecisionEnsemble.identity(1, 3))


def test_shape_mismatch():
    with pytest.raises(ValueError):
        count_edges(PrecisionEnsemble.identity(2, 3), PrecisionEnsemble.identity(2, 4))


def test_nnz_density_examples():
    assert nnz_density(PrecisionEnsemble([[[3.0]], [[1.0]]])) == (2, 1.0)
    assert nnz_density(PrecisionEnsemble([[[5.0]]])) == (1, 1.0)
    assert nnz_density(PrecisionEnsemble.zeros(2, 3)) == (0, 0.0)
    nnz, density = nnz_density(PrecisionEnsemble.identity(2, 3))
    assert nnz == 6
    assert_allclose(density, 6 / 18)


def test_relative_distance(rng):
    reference = (random_spd(rng, 2, 3), random_spd(rng, 2, 3), random_symmetric(rng, 2, 3))
    assert relative_distance(reference, reference) == 0.0
    doubled = tuple(2 * part for part in reference)
    assert_allclose(relative_distance(doubled, reference), 1.0, rtol=1e-14)
    assert_allclose(distance_series([reference, doubled], reference), [0.0, 1.0], atol=1e-14)
    zero = PrecisionEnsemble.zeros(2, 3)
    with pytest.raises(ValueError):
        relative_distance(reference, (zero, zero, zero))


def test_edge_report_of_the_truth_itself():
    truth = gen_nn_network(15, 3, seed=4)
    report = edge_report(truth.precisions, truth)
    assert report.fp == 0 and report.fn == 0
    assert report.tp == sum(truth.edge_counts())
    assert report.sse == 0.0
    assert report.fp_diff == 0
    assert report.selected == report.tp
    summary = report.to_dict()
    assert summary['tp'] == report.tp
    assert len(summary['differential']) == 2


def test_edge_report_single_class():
    report = edge_report(PrecisionEnsemble.identity(1, 3), PrecisionEnsemble.identity(1, 3))
    assert report.differential == []
    assert report.to_dict()['tp_diff'] == 0
