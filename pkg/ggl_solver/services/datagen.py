"""Synthetic nearest-neighbour networks, Gaussian sampling and problem ingestion."""

import logging
import math

import numpy as np
from scipy.spatial.distance import cdist

from ggl_solver.errors import DataValidationError
from ggl_solver.models.ensemble import GglParams, PrecisionEnsemble, ProblemData
from ggl_solver.models.ground_truth import GroundTruth
from ggl_solver.services.file_service import FileService

logger = logging.getLogger(__name__)

DIAGONAL_MARGIN = 0.1
VALUE_LOW = 0.5
VALUE_HIGH = 1.0


def sample_covariance(observations: np.ndarray) -> np.ndarray:
    """Return (1/n) W^T W for an n x p observation matrix W."""
    observations = np.asarray(observations, dtype=float)
    if observations.ndim != 2 or observations.shape[0] < 1 or observations.shape[1] < 1:
        raise ValueError(f'observations must be a non-empty n x p matrix, got shape {observations.shape}')
    covariance = observations.T @ observations / observations.shape[0]
    return 0.5 * (covariance + covariance.T)


def _edge_values(rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw values uniformly from [-1, -0.5] U [0.5, 1]."""
    signs = rng.choice(np.array([-1.0, 1.0]), size=count)
    return signs * rng.uniform(VALUE_LOW, VALUE_HIGH, size=count)


def mutual_knn_edges(points: np.ndarray, neighbors: int) -> list[tuple[int, int]]:
    """Return the pairs i < j that are among each other's nearest neighbours; ties go to the lower index."""
    distances = cdist(points, points)
    np.fill_diagonal(distances, np.inf)
    nearest = np.argsort(distances, axis=1, kind='stable')[:, :neighbors]
    adjacency = np.zeros(distances.shape, dtype=bool)
    adjacency[np.arange(points.shape[0])[:, np.newaxis], nearest] = True
    mutual = adjacency & adjacency.T
    rows, cols = np.nonzero(np.triu(mutual, 1))
    return [(int(i), int(j)) for i, j in zip(rows, cols)]


def gen_nn_network(p: int, k_classes: int, neighbors: int = 5, extra_frac_denom: int = 4, seed: int | None = None, n_extra: int | None = None) -> GroundTruth:
    """
    Plant K precision matrices on a shared mutual-kNN network of p random points in the unit square.

    Every class receives ceil(N / extra_frac_denom) extra edges (or ``n_extra``) at positions outside
    the common network and outside the extras of the other classes. Diagonals are set to the absolute
    row sum plus 0.1, making every block strictly diagonally dominant.
    """
    if neighbors < 1:
        raise ValueError(f'neighbors must be positive, got {neighbors}')
    if p < neighbors + 1:
        raise ValueError(f'p={p} is too small for {neighbors} nearest neighbours')
    if k_classes < 1:
        raise ValueError(f'K must be positive, got {k_classes}')
    if extra_frac_denom < 1:
        raise ValueError(f'extra_frac_denom must be positive, got {extra_frac_denom}')
    rng = np.random.default_rng(seed)

    points = rng.uniform(size=(p, 2))
    common = mutual_knn_edges(points, neighbors)
    base = np.zeros((p, p))
    if common:
        rows, cols = np.array(common).T
        values = _edge_values(rng, len(common))
        base[rows, cols] = values
        base[cols, rows] = values

    count = math.ceil(len(common) / extra_frac_denom) if n_extra is None else n_extra
    common_set = set(common)
    used: set[tuple[int, int]] = set()
    candidates = [(int(i), int(j)) for i, j in zip(*np.triu_indices(p, 1)) if (i, j) not in common_set]
    blocks = []
    extras = []
    for k in range(k_classes):
        available = [pair for pair in candidates if pair not in used]
        if count > len(available):
            raise ValueError(f'cannot place {count} extra edges in class {k}: only {len(available)} free positions')
        picks = rng.choice(len(available), size=count, replace=False) if count else np.array([], dtype=int)
        chosen = {available[index] for index in picks}
        used |= chosen
        extras.append(chosen)

        block = base.copy()
        if chosen:
            rows, cols = np.array(sorted(chosen)).T
            values = _edge_values(rng, len(chosen))
            block[rows, cols] = values
            block[cols, rows] = values
        np.fill_diagonal(block, np.abs(block).sum(axis=1) + DIAGONAL_MARGIN)
        blocks.append(block)

    truth = GroundTruth(PrecisionEnsemble(np.array(blocks)), common_set, extras, points)
    logger.info('generated network: p=%d, K=%d, N=%d common edges, %d extras per class', p, k_classes, truth.n_common, count)
    return truth


def sample_gaussian(truth: GroundTruth, n: int, seed: int | None = None) -> list[np.ndarray]:
    """Draw n rows from N(0, (Sigma^(k))^-1) for every class, class k seeded with seed + k."""
    if n < 1:
        raise ValueError(f'n must be positive, got {n}')
    samples = []
    for k in range(truth.k_classes):
        precision = truth.precisions.block(k)
        if np.linalg.eigvalsh(precision)[0] <= 0:
            raise ValueError(f'precision matrix of class {k} is not positive definite')
        factor = np.linalg.cholesky(np.linalg.inv(precision))
        rng = np.random.default_rng(None if seed is None else seed + k)
        samples.append(rng.standard_normal((n, truth.dim)) @ factor.T)
    return samples


def reparam_to_lambda(w1: float, w2: float) -> GglParams:
    """Map sparsity w1 > 0 and similarity 0 <= w2 < 1 to (lambda1, lambda2)."""
    if not w1 > 0:
        raise ValueError(f'w1 must be positive, got {w1}')
    if not 0 <= w2 < 1:
        raise ValueError(f'w2 must lie in [0, 1), got {w2}')
    return GglParams(w1 * (1.0 - w2), math.sqrt(2.0) * w1 * w2)


def reparam_from_lambda(params: GglParams) -> tuple[float, float]:
    """Map (lambda1, lambda2) to (w1, w2) with w1 = lambda1 + lambda2 / sqrt(2)."""
    w1 = params.lambda1 + params.lambda2 / math.sqrt(2.0)
    if not w1 > 0:
        raise ValueError('w1 is undefined for lambda1 = lambda2 = 0')
    return w1, (params.lambda2 / math.sqrt(2.0)) / w1


def load_problem(manifest_path: str, file_service: FileService | None = None) -> ProblemData:
    """Load covariances (or observations, turned into covariances) listed in a manifest."""
    file_service = file_service or FileService()
    manifest = file_service.read_manifest(manifest_path)
    matrices = []
    counts = []
    for file_path in manifest.files:
        if manifest.mode == 'observations':
            observations = file_service.read_observations_csv(file_path)
            matrices.append(sample_covariance(observations))
            counts.append(observations.shape[0])
        else:
            matrices.append(file_service.read_matrix_csv(file_path))
    for file_path, matrix in zip(manifest.files, matrices):
        if matrix.shape != (manifest.dim, manifest.dim):
            raise DataValidationError(f'{file_path} has dimension {matrix.shape[1]} but {manifest.files[0]} and the manifest use p={manifest.dim}')
    sample_counts = counts if manifest.mode == 'observations' else manifest.sample_counts
    return ProblemData(np.array(matrices), sample_counts)
