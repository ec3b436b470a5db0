"""Primal and dual objective values of the group graphical Lasso problem."""

import numpy as np

from ggl_solver.models.ensemble import GglParams, PrecisionEnsemble, ProblemData
from ggl_solver.services.proxops import ggl_penalty, is_dual_feasible, project_dual_ball
from ggl_solver.services.spectral import neg_logdet


def smooth_objective(omega: PrecisionEnsemble, data: ProblemData) -> float:
    """Return f(Omega) = sum_k -log det Omega^(k) + <S^(k), Omega^(k)>, +inf off the PD cone."""
    value = neg_logdet(omega.blocks)
    if not np.isfinite(value):
        return float('inf')
    return value + data.covariances.inner(omega)


def primal_objective(theta: PrecisionEnsemble, data: ProblemData, params: GglParams) -> float:
    """Return f(Theta) + P(Theta); +inf if a block is not positive definite."""
    value = smooth_objective(theta, data)
    if not np.isfinite(value):
        return value
    return value + ggl_penalty(theta, params)


def _dual_value(x: PrecisionEnsemble, data: ProblemData) -> float:
    value = neg_logdet((x + data.covariances).blocks)
    if not np.isfinite(value):
        return float('-inf')
    return -value + data.k_classes * data.dim


def dual_objective_global(x: PrecisionEnsemble, data: ProblemData, params: GglParams) -> float:
    """Return sum_k (log det(X^(k) + S^(k)) + p) - P*(X); -inf if X is dual infeasible or X + S is not PD."""
    if not is_dual_feasible(x, params):
        return float('-inf')
    return _dual_value(x, data)


def dual_objective_projected(x: PrecisionEnsemble, data: ProblemData, params: GglParams) -> float:
    """Return the dual value at the projection of X onto the domain of P*."""
    return _dual_value(project_dual_ball(x, params), data)


def relative_gap(pobj: float, dobj: float) -> float:
    """Return |pobj - dobj| / (1 + |pobj| + |dobj|), +inf if either value is infinite."""
    if not (np.isfinite(pobj) and np.isfinite(dobj)):
        return float('inf')
    return abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
