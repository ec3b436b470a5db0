"""
Spectral operators of the log-determinant function h(A) = -log det A.

Every function accepts either one symmetric p x p matrix or a stack of shape (K, p, p);
stacks are processed block-wise in a single vectorized LAPACK call.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EigDecomp:
    """Eigendecomposition A = Q diag(d) Q^T with eigenvalues sorted descending."""

    q: np.ndarray
    d: np.ndarray

    @property
    def dim(self) -> int:
        """Matrix dimension p."""
        return self.d.shape[-1]

    def reconstruct(self) -> np.ndarray:
        """Return Q diag(d) Q^T."""
        return self.apply_scalar(self.d)

    def apply_scalar(self, values: np.ndarray) -> np.ndarray:
        """Return Q diag(values) Q^T for eigenvalue-wise function values."""
        return (self.q * values[..., np.newaxis, :]) @ np.swapaxes(self.q, -1, -2)


def eig_sym(a: np.ndarray) -> EigDecomp:
    """Decompose a symmetric matrix (or stack of matrices) with descending eigenvalues."""
    a = np.asarray(a, dtype=float)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f'expected square matrices, got shape {a.shape}')
    if not np.all(np.isfinite(a)):
        raise ValueError('matrix has non-finite entries')
    d, q = np.linalg.eigh(a)
    return EigDecomp(q=q[..., ::-1], d=d[..., ::-1])


def _as_decomp(a) -> EigDecomp:
    return a if isinstance(a, EigDecomp) else eig_sym(a)


def _check_beta(beta: float) -> None:
    if not beta > 0:
        raise ValueError(f'beta must be positive, got {beta}')


def phi_plus_scalar(beta: float, x: np.ndarray) -> np.ndarray:
    """Evaluate (sqrt(x^2 + 4 beta) + x) / 2 without cancellation for negative x."""
    x = np.asarray(x, dtype=float)
    root = np.sqrt(x * x + 4.0 * beta)
    out = np.empty_like(root)
    nonneg = x >= 0
    out[nonneg] = 0.5 * (root[nonneg] + x[nonneg])
    out[~nonneg] = 2.0 * beta / (root[~nonneg] - x[~nonneg])
    return out


def phi_minus_scalar(beta: float, x: np.ndarray) -> np.ndarray:
    """Evaluate (sqrt(x^2 + 4 beta) - x) / 2, i.e. phi_plus at -x."""
    return phi_plus_scalar(beta, -np.asarray(x, dtype=float))


def phi_plus(beta: float, a) -> np.ndarray:
    """Return Prox_{beta h}(A), always positive definite."""
    _check_beta(beta)
    decomp = _as_decomp(a)
    return decomp.apply_scalar(phi_plus_scalar(beta, decomp.d))


def phi_minus(beta: float, a) -> np.ndarray:
    """Return the spectral lift of phi_minus; phi_plus(A) - phi_minus(A) = A."""
    _check_beta(beta)
    decomp = _as_decomp(a)
    return decomp.apply_scalar(phi_minus_scalar(beta, decomp.d))


def moreau_logdet(beta: float, a) -> float:
    """Return the Moreau envelope of beta * h at A, summed over blocks for a stack."""
    _check_beta(beta)
    decomp = _as_decomp(a)
    plus = phi_plus_scalar(beta, decomp.d)
    minus = phi_minus_scalar(beta, decomp.d)
    return float(-beta * np.sum(np.log(plus)) + 0.5 * np.sum(minus * minus))


def gamma_matrix(beta: float, d: np.ndarray) -> np.ndarray:
    """Divided-difference matrix of phi_plus; every entry lies in (0, 1)."""
    plus = phi_plus_scalar(beta, d)
    root = np.sqrt(d * d + 4.0 * beta)
    return (plus[..., :, np.newaxis] + plus[..., np.newaxis, :]) / (root[..., :, np.newaxis] + root[..., np.newaxis, :])


def phi_plus_dderiv(beta: float, decomp: EigDecomp, b: np.ndarray, gamma: np.ndarray | None = None) -> np.ndarray:
    """Directional derivative of phi_plus at the decomposed matrix along B."""
    _check_beta(beta)
    b = np.asarray(b, dtype=float)
    if b.shape[-2:] != (decomp.dim, decomp.dim) or b.shape[:-2] != decomp.d.shape[:-1]:
        raise ValueError(f'direction shape {b.shape} does not match decomposition of dimension {decomp.dim}')
    if gamma is None:
        gamma = gamma_matrix(beta, decomp.d)
    qt = np.swapaxes(decomp.q, -1, -2)
    return decomp.q @ (gamma * (qt @ b @ decomp.q)) @ qt


def neg_logdet(a: np.ndarray) -> float:
    """Return h(A) = -log det A summed over blocks, +inf if a block is not positive definite."""
    d = np.linalg.eigvalsh(np.asarray(a, dtype=float))
    if np.any(d <= 0):
        return float('inf')
    return float(-np.sum(np.log(d)))
