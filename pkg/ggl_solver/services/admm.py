"""
ADMM on the dual problem

    min  sum_k -log det Z^(k) + P*(X)   subject to  Z - X - S = 0

with multiplier Theta, which converges to the precision matrices. X-updates are the Moreau
complement of Prox_P, Z-updates are the log-det prox phi_plus_{1/sigma}.
"""

import logging
import time
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ggl_solver.errors import SolverError
from ggl_solver.models.config import AdmmConfig
from ggl_solver.models.ensemble import GglParams, PrecisionEnsemble, ProblemData
from ggl_solver.models.trace import AdmmIterationRecord, AdmmTrace
from ggl_solver.services.objectives import primal_objective
from ggl_solver.services.proxops import prox_ggl
from ggl_solver.services.spectral import phi_plus
from ggl_solver.utils.observer import Observable, ObserverKeys

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdmmState:
    """Iterate (X, Z, Theta) and the current penalty sigma."""

    x: PrecisionEnsemble
    z: PrecisionEnsemble
    theta: PrecisionEnsemble
    sigma: float

    @classmethod
    def initial(cls, k_classes: int, dim: int, sigma: float) -> 'AdmmState':
        """Return the identity start X = 0, Z = Theta = I."""
        identity = PrecisionEnsemble.identity(k_classes, dim)
        return cls(PrecisionEnsemble.zeros(k_classes, dim), identity, identity, sigma)


class AdmmResult(NamedTuple):
    """Final ADMM iterate and its trace."""

    x: PrecisionEnsemble
    z: PrecisionEnsemble
    theta: PrecisionEnsemble
    trace: AdmmTrace


def admm_step(state: AdmmState, data: ProblemData, params: GglParams, tau: float) -> tuple[PrecisionEnsemble, PrecisionEnsemble, PrecisionEnsemble]:
    """Run one X, Z, Theta sweep."""
    sigma = state.sigma
    if not sigma > 0:
        raise ValueError(f'sigma must be positive, got {sigma}')
    s = data.covariances
    w = state.z + state.theta / sigma - s
    x_next = w - prox_ggl(w, params, 1.0)
    z_next = PrecisionEnsemble.wrap(phi_plus(1.0 / sigma, (x_next - state.theta / sigma + s).blocks))
    theta_next = state.theta + (tau * sigma) * (z_next - x_next - s)
    return x_next, z_next, theta_next


def kkt_residual_admm(x: PrecisionEnsemble, z: PrecisionEnsemble, theta: PrecisionEnsemble, data: ProblemData, params: GglParams) -> float:
    """Return eta_A, the largest relative residual of the dual KKT system."""
    s = data.covariances
    prox_term = (theta - prox_ggl(theta + x, params, 1.0)).norm() / (1.0 + theta.norm())
    feasibility = (z - x - s).norm() / (1.0 + s.norm())
    logdet_term = (z - PrecisionEnsemble.wrap(phi_plus(1.0, (z - theta).blocks))).norm() / (1.0 + z.norm())
    return max(prox_term, feasibility, logdet_term)


def admm_primal_triple(
    x: PrecisionEnsemble, z: PrecisionEnsemble, theta: PrecisionEnsemble, data: ProblemData, params: GglParams
) -> tuple[PrecisionEnsemble, PrecisionEnsemble, PrecisionEnsemble]:
    """Map an ADMM iterate to (Omega, Theta, X) in the proximal point convention; Omega is positive definite."""
    omega = PrecisionEnsemble.wrap(phi_plus(1.0, (theta - data.covariances - x).blocks))
    return omega, prox_ggl(theta + x, params, 1.0), x


class AdmmSolver(Observable):
    """ADMM with residual-balancing penalty updates."""

    def __init__(self, data: ProblemData, params: GglParams, config: AdmmConfig | None = None):
        """Initialize the solver."""
        super().__init__()
        self.data: ProblemData = data
        self.params: GglParams = params
        self.config: AdmmConfig = config or AdmmConfig()
        self.config.validate()

    def _adapt_sigma(self, sigma: float, primal_residual: float, dual_residual: float) -> float:
        config = self.config
        if primal_residual > config.adapt_ratio * dual_residual:
            sigma *= config.adapt_factor
        elif dual_residual > config.adapt_ratio * primal_residual:
            sigma /= config.adapt_factor
        return min(max(sigma, config.sigma_min), config.sigma_max)

    def solve(self, start: AdmmState | None = None) -> AdmmResult:
        """Iterate until eta_A <= tol or the iteration cap; hitting the cap is flagged on the trace, not raised."""
        config, data, params = self.config, self.data, self.params
        state = start or AdmmState.initial(data.k_classes, data.dim, config.sigma)
        trace = AdmmTrace()
        started = time.perf_counter()
        s_norm = data.covariances.norm()

        eta = kkt_residual_admm(state.x, state.z, state.theta, data, params)
        pfeas = (state.z - state.x - data.covariances).norm()
        trace.append(AdmmIterationRecord(0, state.sigma, eta, pfeas, 0.0, primal_objective(state.theta, data, params), 0.0))
        iteration = 0
        while eta > config.tol and iteration < config.max_iters:
            x, z, theta = admm_step(state, data, params, config.tau)
            iteration += 1
            if not (np.all(np.isfinite(z.blocks)) and np.all(np.isfinite(theta.blocks))):
                trace.iterations = iteration
                raise SolverError(f'ADMM produced non-finite iterates at iteration {iteration}', trace=trace, diagnostics={'sigma': state.sigma})
            pfeas = (z - x - data.covariances).norm()
            dfeas = state.sigma * (z - state.z).norm()
            eta = kkt_residual_admm(x, z, theta, data, params)
            elapsed = 1000.0 * (time.perf_counter() - started)
            trace.append(AdmmIterationRecord(iteration, state.sigma, eta, pfeas, dfeas, primal_objective(theta, data, params), elapsed))

            sigma = state.sigma
            if config.adapt and iteration % config.adapt_period == 0:
                sigma = self._adapt_sigma(sigma, pfeas, dfeas)
                logger.info('ADMM %d: eta_a %.3e, pfeas %.3e, dfeas %.3e, sigma %.3g', iteration, eta, pfeas / (1.0 + s_norm), dfeas, sigma)
                self.notify_observers(ObserverKeys.ADMM_ITERATION, trace.last)
            state = AdmmState(x, z, theta, sigma)

        trace.iterations = iteration
        trace.converged = eta <= config.tol
        if not trace.converged:
            logger.warning('ADMM stopped at the iteration cap %d with eta_a %.3e > %.3e', config.max_iters, eta, config.tol)
        self.notify_observers(ObserverKeys.SOLVE_FINISHED, trace)
        return AdmmResult(state.x, state.z, state.theta, trace)


def solve_admm(data: ProblemData, params: GglParams, config: AdmmConfig | None = None) -> AdmmResult:
    """Run ADMM from the identity start."""
    return AdmmSolver(data, params, config).solve()
