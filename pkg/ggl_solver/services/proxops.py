"""
Proximal operators of the group graphical Lasso penalty and their generalized Jacobians.

The penalty is P(X) = sum over i != j of phi(X_[ij]) with phi(x) = lambda1 * |x|_1 + lambda2 * |x|_2
acting on the K-vector X_[ij] of (i, j) entries. Diagonal groups are not penalized.
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ggl_solver.models.ensemble import GglParams, PrecisionEnsemble

logger = logging.getLogger(__name__)

DUAL_FEASIBILITY_TOL = 1e-9


class JacobianKind(Enum):
    """Structure of one group's Jacobian matrix."""

    ZERO = 'zero'
    DIAG_SCALED = 'diag_scaled'
    RANK1_CORRECTED = 'rank1_corrected'


@dataclass(frozen=True)
class GroupJacobian:
    """
    Factored K x K matrix M = c * Lambda + (1 - c) * w w^T.

    Lambda is the 0/1 diagonal of ``active_mask``; w is a unit vector supported on the active
    coordinates. DIAG_SCALED groups have c = 1 and no rank-one part.
    """

    kind: JacobianKind
    active_mask: np.ndarray
    scale: float = 0.0
    w: np.ndarray | None = None

    def apply(self, y: np.ndarray) -> np.ndarray:
        """Return M y."""
        y = np.asarray(y, dtype=float)
        if self.kind is JacobianKind.ZERO:
            return np.zeros_like(y)
        out = self.scale * (self.active_mask * y)
        if self.kind is JacobianKind.RANK1_CORRECTED:
            out = out + (1.0 - self.scale) * self.w * np.dot(self.w, y)
        return out

    def matrix(self) -> np.ndarray:
        """Return the dense K x K matrix."""
        return np.column_stack([self.apply(e) for e in np.eye(self.active_mask.shape[0])])


def _check_nonneg(name: str, value: float) -> None:
    if value < 0:
        raise ValueError(f'{name} must be nonnegative, got {value}')


def soft_threshold(u: np.ndarray, t: float) -> np.ndarray:
    """Component-wise sign(u) * max(|u| - t, 0)."""
    _check_nonneg('threshold', t)
    u = np.asarray(u, dtype=float)
    return np.sign(u) * np.maximum(np.abs(u) - t, 0.0)


def project_ball(v: np.ndarray, r: float) -> np.ndarray:
    """Project v onto the Euclidean ball of radius r."""
    _check_nonneg('radius', r)
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm <= r:
        return v.copy()
    return (r / norm) * v


def _prox_sgl_columns(u: np.ndarray, lambda1: float, lambda2: float) -> np.ndarray:
    """Apply the sparse-group-Lasso prox to every column of a (K, m) array."""
    v = np.sign(u) * np.maximum(np.abs(u) - lambda1, 0.0)
    if lambda2 == 0:
        return v
    norms = np.linalg.norm(v, axis=0)
    shrink = np.zeros_like(norms)
    outside = norms > lambda2
    shrink[outside] = 1.0 - lambda2 / norms[outside]
    return v * shrink


def prox_sgl(u: np.ndarray, lambda1: float, lambda2: float) -> np.ndarray:
    """Return argmin_x lambda1 |x|_1 + lambda2 |x|_2 + |x - u|^2 / 2."""
    _check_nonneg('lambda1', lambda1)
    _check_nonneg('lambda2', lambda2)
    u = np.asarray(u, dtype=float)
    return _prox_sgl_columns(u.reshape(-1, 1), lambda1, lambda2).reshape(u.shape)


def jac_prox_sgl(u: np.ndarray, lambda1: float, lambda2: float) -> GroupJacobian:
    """Select an element of the generalized Jacobian of prox_sgl at u."""
    _check_nonneg('lambda1', lambda1)
    _check_nonneg('lambda2', lambda2)
    u = np.asarray(u, dtype=float)
    mask = (np.abs(u) > lambda1).astype(float)
    v = soft_threshold(u, lambda1)
    norm = float(np.linalg.norm(v))
    if not mask.any() or norm <= lambda2:
        return GroupJacobian(JacobianKind.ZERO, np.zeros_like(mask))
    if lambda2 == 0:
        return GroupJacobian(JacobianKind.DIAG_SCALED, mask, 1.0)
    return GroupJacobian(JacobianKind.RANK1_CORRECTED, mask, 1.0 - lambda2 / norm, v / norm)


def ggl_penalty(theta: PrecisionEnsemble, params: GglParams) -> float:
    """Return P(Theta), counting both orders (i, j) and (j, i) of every off-diagonal group."""
    groups = theta.upper_groups()
    if groups.size == 0:
        return 0.0
    value = params.lambda1 * np.abs(groups).sum() + params.lambda2 * np.linalg.norm(groups, axis=0).sum()
    return float(2.0 * value)


def prox_ggl(x: PrecisionEnsemble, params: GglParams, sigma: float = 1.0) -> PrecisionEnsemble:
    """Return Prox_{sigma P}(X): off-diagonal groups shrunk with (sigma lambda1, sigma lambda2), diagonals kept."""
    if not sigma > 0:
        raise ValueError(f'sigma must be positive, got {sigma}')
    if not params.is_penalized:
        return x
    return x.with_upper_groups(_prox_sgl_columns(x.upper_groups(), sigma * params.lambda1, sigma * params.lambda2))


class EnsembleJacobian:
    """
    Generalized Jacobian of Prox_{sigma P} stored group-sparse.

    Only groups i < j with a nonzero matrix are kept; diagonal groups act as the identity.
    """

    def __init__(self, dim: int, k_classes: int, rows: np.ndarray, cols: np.ndarray, masks: np.ndarray, scales: np.ndarray, ws: np.ndarray):
        """Initialize from the per-group factors of the active groups."""
        self.dim: int = dim
        self.k_classes: int = k_classes
        self.rows: np.ndarray = rows
        self.cols: np.ndarray = cols
        self.masks: np.ndarray = masks
        self.scales: np.ndarray = scales
        self.ws: np.ndarray = ws

    @property
    def active_groups(self) -> int:
        """Number of stored (non-zero) off-diagonal groups."""
        return int(self.rows.shape[0])

    def group(self, i: int, j: int) -> GroupJacobian:
        """Return the Jacobian of group (i, j); symmetric pairs share one entry."""
        if i == j:
            return GroupJacobian(JacobianKind.DIAG_SCALED, np.ones(self.k_classes), 1.0)
        i, j = min(i, j), max(i, j)
        hits = np.flatnonzero((self.rows == i) & (self.cols == j))
        if hits.size == 0:
            return GroupJacobian(JacobianKind.ZERO, np.zeros(self.k_classes))
        index = hits[0]
        scale = float(self.scales[index])
        if scale == 1.0:
            return GroupJacobian(JacobianKind.DIAG_SCALED, self.masks[:, index].copy(), 1.0)
        return GroupJacobian(JacobianKind.RANK1_CORRECTED, self.masks[:, index].copy(), scale, self.ws[:, index].copy())

    def apply_array(self, y: np.ndarray) -> np.ndarray:
        """Apply the operator to a symmetric (K, p, p) array."""
        out = np.zeros_like(y)
        diag = np.arange(self.dim)
        out[:, diag, diag] = y[:, diag, diag]
        if self.active_groups:
            yg = y[:, self.rows, self.cols]
            projected = np.sum(self.ws * yg, axis=0)
            outg = self.scales * (self.masks * yg) + (1.0 - self.scales) * self.ws * projected
            out[:, self.rows, self.cols] = outg
            out[:, self.cols, self.rows] = outg
        return out

    def __repr__(self) -> str:
        """Short description."""
        total = self.dim * (self.dim - 1) // 2
        return f'EnsembleJacobian(active={self.active_groups}/{total})'


def jac_prox_ggl(x: PrecisionEnsemble, params: GglParams, sigma: float = 1.0) -> EnsembleJacobian:
    """Select a generalized Jacobian of Prox_{sigma P} at X, keeping only non-zero groups."""
    if not sigma > 0:
        raise ValueError(f'sigma must be positive, got {sigma}')
    k_classes, dim = x.shape
    rows, cols = np.triu_indices(dim, 1)
    u = x.upper_groups()
    lambda1, lambda2 = sigma * params.lambda1, sigma * params.lambda2
    if not params.is_penalized:
        # Prox is the identity, including at exact zeros
        return EnsembleJacobian(dim, k_classes, rows, cols, np.ones_like(u), np.ones(rows.shape[0]), np.zeros_like(u))

    masks = (np.abs(u) > lambda1).astype(float)
    v = np.sign(u) * np.maximum(np.abs(u) - lambda1, 0.0)
    norms = np.linalg.norm(v, axis=0)
    keep = masks.any(axis=0) & (norms > lambda2)
    masks, v, norms = masks[:, keep], v[:, keep], norms[keep]
    if lambda2 == 0:
        scales = np.ones_like(norms)
        ws = np.zeros_like(v)
    else:
        scales = 1.0 - lambda2 / norms
        ws = v / norms
    return EnsembleJacobian(dim, k_classes, rows[keep], cols[keep], masks, scales, ws)


def jac_apply(jacobian: EnsembleJacobian, y: PrecisionEnsemble) -> PrecisionEnsemble:
    """Apply a stored Jacobian to an ensemble."""
    if y.shape != (jacobian.k_classes, jacobian.dim):
        raise ValueError(f'ensemble shape {y.shape} does not match Jacobian shape {(jacobian.k_classes, jacobian.dim)}')
    return PrecisionEnsemble.wrap(jacobian.apply_array(y.blocks))


def project_dual_ball(x: PrecisionEnsemble, params: GglParams) -> PrecisionEnsemble:
    """Project onto the domain of the penalty's conjugate: zero diagonals, groups in lambda1-box + lambda2-ball."""
    groups = x.upper_groups()
    projected = groups - _prox_sgl_columns(groups, params.lambda1, params.lambda2)
    array = np.array(x.with_upper_groups(projected).blocks)
    diag = np.arange(x.dim)
    array[:, diag, diag] = 0.0
    return PrecisionEnsemble.wrap(array)


def dual_infeasibility(x: PrecisionEnsemble, params: GglParams) -> float:
    """Frobenius distance from X to the domain of the penalty's conjugate."""
    return (x - project_dual_ball(x, params)).norm()


def is_dual_feasible(x: PrecisionEnsemble, params: GglParams, tol: float = DUAL_FEASIBILITY_TOL) -> bool:
    """Return True if every diagonal vanishes and every group passes the prox test within tol."""
    if np.abs(x.diagonal_groups()).max() > tol:
        return False
    groups = x.upper_groups()
    if groups.size == 0:
        return True
    residual = _prox_sgl_columns(groups, params.lambda1, params.lambda2)
    return bool(np.linalg.norm(residual, axis=0).max() <= tol)
