"""Edge recovery, sparsity and convergence-distance metrics."""

import logging

import numpy as np

from ggl_solver.models.edge_report import DifferentialCounts, EdgeCounts, EdgeReport
from ggl_solver.models.ensemble import PrecisionEnsemble
from ggl_solver.models.ground_truth import GroundTruth

logger = logging.getLogger(__name__)

EDGE_THRESHOLD = 1e-10
DIFFERENTIAL_THRESHOLD = 1e-6
NNZ_MASS = 0.999


def _truth_ensemble(truth) -> PrecisionEnsemble:
    return truth.precisions if isinstance(truth, GroundTruth) else truth


def _check_shapes(estimate: PrecisionEnsemble, truth: PrecisionEnsemble) -> None:
    if estimate.shape != truth.shape:
        raise ValueError(f'estimate shape {estimate.shape} does not match truth shape {truth.shape}')


def count_edges(estimate: PrecisionEnsemble, truth) -> list[EdgeCounts]:
    """Count selected edges (|value| > 1e-10, i < j) against the true edges, per class."""
    truth = _truth_ensemble(truth)
    _check_shapes(estimate, truth)
    selected = np.abs(estimate.upper_groups()) > EDGE_THRESHOLD
    actual = truth.upper_groups() != 0
    counts = []
    for k in range(estimate.k_classes):
        tp = int(np.sum(selected[k] & actual[k]))
        fp = int(np.sum(selected[k] & ~actual[k]))
        fn = int(np.sum(~selected[k] & actual[k]))
        counts.append(EdgeCounts(tp, fp, fn))
    return counts


def sse(estimate: PrecisionEnsemble, truth) -> float:
    """Sum of squared off-diagonal errors over i < j and all classes."""
    truth = _truth_ensemble(truth)
    _check_shapes(estimate, truth)
    return float(np.sum((estimate.upper_groups() - truth.upper_groups()) ** 2))


def differential_edges(estimate: PrecisionEnsemble, truth) -> list[DifferentialCounts]:
    """Count entries differing by more than 1e-6 between classes k and k + 1."""
    truth = _truth_ensemble(truth)
    _check_shapes(estimate, truth)
    if estimate.k_classes < 2:
        raise ValueError('differential edges need at least two classes')
    estimated = np.abs(np.diff(estimate.upper_groups(), axis=0)) > DIFFERENTIAL_THRESHOLD
    actual = np.abs(np.diff(truth.upper_groups(), axis=0)) > DIFFERENTIAL_THRESHOLD
    return [DifferentialCounts(int(np.sum(est & act)), int(np.sum(est & ~act))) for est, act in zip(estimated, actual)]


def nnz_density(estimate: PrecisionEnsemble) -> tuple[int, float]:
    """Return the smallest count of largest entries carrying 99.9% of the l1 mass, and its density."""
    magnitudes = np.sort(np.abs(estimate.blocks).ravel())[::-1]
    total = magnitudes.sum()
    if total == 0:
        return 0, 0.0
    cumulative = np.cumsum(magnitudes)
    nnz = int(min(np.searchsorted(cumulative, NNZ_MASS * total, side='left') + 1, magnitudes.size))
    return nnz, nnz / magnitudes.size


def relative_distance(triple: tuple, reference: tuple) -> float:
    """Return (|Omega - Omega*| + |Theta - Theta*| + |X - X*|) / (|Omega*| + |Theta*| + |X*|)."""
    numerator = sum((iterate - target).norm() for iterate, target in zip(triple, reference))
    denominator = sum(target.norm() for target in reference)
    if denominator == 0:
        raise ValueError('reference triple is zero')
    return numerator / denominator


def distance_series(iterates: list[tuple], reference: tuple) -> np.ndarray:
    """Relative distance of every recorded (Omega, Theta, X) iterate to the reference triple."""
    return np.array([relative_distance(triple, reference) for triple in iterates])


def edge_report(estimate: PrecisionEnsemble, truth) -> EdgeReport:
    """Collect every recovery metric of an estimate."""
    truth = _truth_ensemble(truth)
    differential = differential_edges(estimate, truth) if estimate.k_classes > 1 else []
    nnz, density = nnz_density(estimate)
    return EdgeReport(count_edges(estimate, truth), sse(estimate, truth), differential, nnz, density)
