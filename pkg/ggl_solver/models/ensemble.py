"""Collections of K symmetric p x p matrices and the problem data built on them."""

from dataclasses import dataclass

import numpy as np

from ggl_solver.errors import DataValidationError

SYMMETRY_REJECT_TOL = 1e-8
PSD_TOL = 1e-10


class PrecisionEnsemble:
    """
    K symmetric p x p matrices stored densely as one (K, p, p) array.

    Block k is ``blocks[k]``; the group (i, j) is the K-vector ``blocks[:, i, j]``.
    Instances are immutable: the backing array is marked read-only.
    """

    def __init__(self, blocks, symmetrize: bool = True):
        """Build an ensemble, averaging away asymmetry below 1e-8 and rejecting larger asymmetry."""
        array = np.array(blocks, dtype=float)
        if array.ndim == 2:
            array = array[np.newaxis]
        if array.ndim != 3 or array.shape[1] != array.shape[2]:
            raise ValueError(f'blocks must have shape (K, p, p), got {array.shape}')
        if array.shape[0] < 1 or array.shape[1] < 1:
            raise ValueError('an ensemble needs at least one block of size at least 1')
        if not np.all(np.isfinite(array)):
            raise ValueError('ensemble blocks must be finite')
        if symmetrize:
            transposed = np.swapaxes(array, 1, 2)
            asymmetry = np.abs(array - transposed) / (1.0 + np.abs(array))
            if asymmetry.max() > SYMMETRY_REJECT_TOL:
                raise DataValidationError(f'blocks are not symmetric (relative asymmetry {asymmetry.max():.3e})')
            array = 0.5 * (array + transposed)
        array.setflags(write=False)
        self._blocks: np.ndarray = array

    @classmethod
    def wrap(cls, array: np.ndarray) -> 'PrecisionEnsemble':
        """Wrap an array that is symmetric by construction, skipping the checks."""
        ensemble = cls.__new__(cls)
        array = np.asarray(array, dtype=float)
        array.setflags(write=False)
        ensemble._blocks = array
        return ensemble

    @classmethod
    def identity(cls, k_classes: int, dim: int) -> 'PrecisionEnsemble':
        """Return K copies of the p x p identity."""
        return cls.wrap(np.broadcast_to(np.eye(dim), (k_classes, dim, dim)).copy())

    @classmethod
    def zeros(cls, k_classes: int, dim: int) -> 'PrecisionEnsemble':
        """Return the zero ensemble."""
        return cls.wrap(np.zeros((k_classes, dim, dim)))

    @property
    def blocks(self) -> np.ndarray:
        """Read-only (K, p, p) array."""
        return self._blocks

    @property
    def k_classes(self) -> int:
        """Number of classes K."""
        return self._blocks.shape[0]

    @property
    def dim(self) -> int:
        """Matrix dimension p."""
        return self._blocks.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        """The pair (K, p)."""
        return self.k_classes, self.dim

    def block(self, k: int) -> np.ndarray:
        """Return block k (read-only)."""
        return self._blocks[k]

    def group_view(self, i: int, j: int) -> np.ndarray:
        """Return the K-vector of (i, j) entries across blocks."""
        if not (0 <= i < self.dim and 0 <= j < self.dim):
            raise ValueError(f'group index ({i}, {j}) out of range for p={self.dim}')
        return self._blocks[:, i, j]

    def upper_groups(self) -> np.ndarray:
        """Return all groups i < j as a (K, p(p-1)/2) array in row-major upper-triangle order."""
        rows, cols = np.triu_indices(self.dim, 1)
        return self._blocks[:, rows, cols]

    def with_upper_groups(self, groups: np.ndarray) -> 'PrecisionEnsemble':
        """Return a copy whose off-diagonal groups are replaced (mirrored) and diagonals kept."""
        rows, cols = np.triu_indices(self.dim, 1)
        array = self._blocks.copy()
        array[:, rows, cols] = groups
        array[:, cols, rows] = groups
        return PrecisionEnsemble.wrap(array)

    def diagonal_groups(self) -> np.ndarray:
        """Return the (K, p) array of diagonal entries."""
        return np.diagonal(self._blocks, axis1=1, axis2=2)

    def inner(self, other: 'PrecisionEnsemble') -> float:
        """Frobenius inner product summed over blocks."""
        _check_same_shape(self, other)
        return float(np.vdot(self._blocks, other._blocks))

    def norm(self) -> float:
        """Frobenius norm of the stacked blocks."""
        return float(np.linalg.norm(self._blocks.ravel()))

    def is_close(self, other: 'PrecisionEnsemble', atol: float = 0.0, rtol: float = 1e-12) -> bool:
        """Element-wise closeness test."""
        _check_same_shape(self, other)
        return bool(np.allclose(self._blocks, other._blocks, atol=atol, rtol=rtol))

    def __add__(self, other: 'PrecisionEnsemble') -> 'PrecisionEnsemble':
        """Add block-wise."""
        _check_same_shape(self, other)
        return PrecisionEnsemble.wrap(self._blocks + other._blocks)

    def __sub__(self, other: 'PrecisionEnsemble') -> 'PrecisionEnsemble':
        """Subtract block-wise."""
        _check_same_shape(self, other)
        return PrecisionEnsemble.wrap(self._blocks - other._blocks)

    def __mul__(self, scalar: float) -> 'PrecisionEnsemble':
        """Scale every block."""
        return PrecisionEnsemble.wrap(self._blocks * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> 'PrecisionEnsemble':
        """Divide every block by a scalar."""
        return PrecisionEnsemble.wrap(self._blocks / float(scalar))

    def __neg__(self) -> 'PrecisionEnsemble':
        """Negate every block."""
        return PrecisionEnsemble.wrap(-self._blocks)

    def __repr__(self) -> str:
        """Short description."""
        return f'PrecisionEnsemble(K={self.k_classes}, p={self.dim})'


def _check_same_shape(x: PrecisionEnsemble, y: PrecisionEnsemble) -> None:
    if x.shape != y.shape:
        raise ValueError(f'ensemble shapes differ: {x.shape} vs {y.shape}')


def group_view(x: PrecisionEnsemble, i: int, j: int) -> np.ndarray:
    """Return (X^(1)_ij, ..., X^(K)_ij) with 0-based indices."""
    return x.group_view(i, j)


def inner(x: PrecisionEnsemble, y: PrecisionEnsemble) -> float:
    """Return sum_k <X^(k), Y^(k)>."""
    return x.inner(y)


@dataclass(frozen=True)
class GglParams:
    """Penalty weights: lambda1 on every off-diagonal entry, lambda2 on every cross-class group."""

    lambda1: float
    lambda2: float

    def __post_init__(self):
        """Validate the weights."""
        if not (np.isfinite(self.lambda1) and np.isfinite(self.lambda2)):
            raise ValueError('penalty weights must be finite')
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError(f'penalty weights must be nonnegative, got ({self.lambda1}, {self.lambda2})')

    @property
    def is_penalized(self) -> bool:
        """True unless both weights are zero."""
        return self.lambda1 > 0 or self.lambda2 > 0

    def scaled(self, sigma: float) -> 'GglParams':
        """Return (sigma * lambda1, sigma * lambda2)."""
        return GglParams(sigma * self.lambda1, sigma * self.lambda2)

    def to_dict(self) -> dict:
        """Convert the weights to a dictionary."""
        return {'lambda1': float(self.lambda1), 'lambda2': float(self.lambda2)}


class ProblemData:
    """Sample covariances S^(k) and sample counts n_k of a joint estimation problem."""

    def __init__(self, covariances, sample_counts=None):
        """Validate symmetry and semidefiniteness of every covariance."""
        self.covariances: PrecisionEnsemble = covariances if isinstance(covariances, PrecisionEnsemble) else PrecisionEnsemble(covariances)
        k_classes = self.covariances.k_classes
        if sample_counts is None:
            sample_counts = [1] * k_classes
        sample_counts = [int(n) for n in sample_counts]
        if len(sample_counts) != k_classes:
            raise DataValidationError(f'{len(sample_counts)} sample counts given for {k_classes} classes')
        if any(n < 1 for n in sample_counts):
            raise DataValidationError('sample counts must be positive')
        self.sample_counts: tuple[int, ...] = tuple(sample_counts)

        for k in range(k_classes):
            block = self.covariances.block(k)
            eigenvalues = np.linalg.eigvalsh(block)
            scale = max(np.linalg.norm(block, 2), 1.0)
            if eigenvalues[0] < -PSD_TOL * scale:
                raise DataValidationError(f'covariance {k} is not positive semidefinite (smallest eigenvalue {eigenvalues[0]:.3e})')

    @property
    def k_classes(self) -> int:
        """Number of classes K."""
        return self.covariances.k_classes

    @property
    def dim(self) -> int:
        """Number of variables p."""
        return self.covariances.dim

    def max_offdiagonal(self) -> float:
        """Largest absolute off-diagonal covariance entry over all classes."""
        groups = self.covariances.upper_groups()
        return float(np.abs(groups).max()) if groups.size else 0.0
