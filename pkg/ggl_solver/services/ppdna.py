"""
Proximal point dual Newton algorithm (PPDNA) for the group graphical Lasso

    min over Theta of  sum_k ( -log det Theta^(k) + <S^(k), Theta^(k)> ) + P(Theta).

Each outer iteration solves the proximal subproblem in the split variables (Omega, Theta) with
Omega = Theta through the semismooth Newton method on its dual, then enlarges sigma_t.
"""

import copy
import enum
import logging
import time
from typing import NamedTuple

import numpy as np

from ggl_solver.errors import ConvergenceError, SolverError
from ggl_solver.models.config import AdmmConfig, PpdnaConfig, WarmStartConfig
from ggl_solver.models.ensemble import GglParams, PrecisionEnsemble, ProblemData
from ggl_solver.models.trace import OuterIterationRecord, SolveTrace
from ggl_solver.services.admm import AdmmSolver, admm_primal_triple
from ggl_solver.services.dualnewton import DualEvaluation, SubproblemState, primal_step_norm, solve_subproblem, subproblem_gap
from ggl_solver.services.evalmetrics import relative_distance
from ggl_solver.services.objectives import dual_objective_global, dual_objective_projected, primal_objective, relative_gap, smooth_objective
from ggl_solver.services.proxops import ggl_penalty, prox_ggl
from ggl_solver.services.spectral import phi_plus
from ggl_solver.utils.observer import Observable, ObserverKeys

logger = logging.getLogger(__name__)

__all__ = [
    'Criterion',
    'PpdnaResult',
    'PpdnaSolver',
    'check_criterion',
    'criterion_holds',
    'dual_objective_global',
    'kkt_residual_primal',
    'phi_value',
    'solve',
    'warm_start',
]

FEASIBILITY_TOL = 1e-12
WEAK_DUALITY_TOL = 1e-9
GRADIENT_FLOOR = 1e-13
STALL_WINDOW = 5


class Criterion(enum.Enum):
    """Inexactness tests for accepting a subproblem iterate."""

    A = "A'"
    B = "B'"


class PpdnaResult(NamedTuple):
    """Final primal-dual triple and the solve trace."""

    omega: PrecisionEnsemble
    theta: PrecisionEnsemble
    x: PrecisionEnsemble
    trace: SolveTrace


def phi_value(
    omega: PrecisionEnsemble,
    theta: PrecisionEnsemble,
    anchors: tuple[PrecisionEnsemble, PrecisionEnsemble],
    sigma_t: float,
    data: ProblemData,
    params: GglParams,
) -> float:
    """Return the proximal subproblem objective on the set Omega = Theta; +inf if a block is not PD."""
    if not omega.is_close(theta, atol=FEASIBILITY_TOL, rtol=0.0):
        raise ValueError('phi_value is only defined for Omega = Theta')
    omega_t, theta_t = anchors
    value = smooth_objective(omega, data)
    if not np.isfinite(value):
        return float('inf')
    omega_step = omega - omega_t
    theta_step = theta - theta_t
    return value + ggl_penalty(theta, params) + (omega_step.inner(omega_step) + theta_step.inner(theta_step)) / (2.0 * sigma_t)


def criterion_holds(kind: Criterion, gap: float, step_norm: float, eps_t: float, gamma_t: float, sigma_t: float) -> bool:
    """Test (A') gap <= eps_t^2 / 2 sigma_t or (B') gap <= gamma_t^2 step_norm^2 / 2 sigma_t."""
    kind = Criterion(kind)
    if kind is Criterion.A:
        return gap <= eps_t**2 / (2.0 * sigma_t)
    return gap <= gamma_t**2 * step_norm**2 / (2.0 * sigma_t)


def check_criterion(kind, phi: float, upsilon: float, step_norm: float, eps_t: float, gamma_t: float, sigma_t: float) -> bool:
    """Evaluate an inexactness criterion from the subproblem primal and dual values."""
    if phi < upsilon - WEAK_DUALITY_TOL * (1.0 + abs(upsilon)):
        raise RuntimeError(f'weak duality violated: phi {phi:.12e} < upsilon {upsilon:.12e}')
    return criterion_holds(kind, max(phi - upsilon, 0.0), step_norm, eps_t, gamma_t, sigma_t)


def kkt_residual_primal(omega: PrecisionEnsemble, theta: PrecisionEnsemble, x: PrecisionEnsemble, data: ProblemData, params: GglParams) -> float:
    """Return eta_P, the largest relative residual of the primal KKT system."""
    theta_scale = 1.0 + theta.norm()
    prox_term = (theta - prox_ggl(theta + x, params, 1.0)).norm() / theta_scale
    split_term = (theta - omega).norm() / theta_scale
    logdet_term = (omega - PrecisionEnsemble.wrap(phi_plus(1.0, (omega - data.covariances - x).blocks))).norm() / (1.0 + omega.norm())
    return max(prox_term, split_term, logdet_term)


def _warm_start(data: ProblemData, params: GglParams, wcfg: WarmStartConfig, epsilon: float, admm_config: AdmmConfig | None = None) -> tuple[tuple, int]:
    if not wcfg.enabled:
        identity = PrecisionEnsemble.identity(data.k_classes, data.dim)
        return (identity, identity, PrecisionEnsemble.zeros(data.k_classes, data.dim)), 0
    # the configured ADMM run with the warm start's tolerance and cap
    admm_config = copy.copy(admm_config) if admm_config is not None else AdmmConfig()
    admm_config.tol = wcfg.tol_multiplier * epsilon
    admm_config.max_iters = wcfg.max_iters
    x, z, theta, trace = AdmmSolver(data, params, admm_config).solve()
    logger.info('warm start: %d ADMM iterations, eta_a %.3e', trace.iterations, trace.last.eta_a)
    return admm_primal_triple(x, z, theta, data, params), trace.iterations


def warm_start(
    data: ProblemData,
    params: GglParams,
    wcfg: WarmStartConfig,
    epsilon: float = 1e-6,
    admm_config: AdmmConfig | None = None,
) -> tuple[PrecisionEnsemble, PrecisionEnsemble, PrecisionEnsemble]:
    """Return a starting triple from a short ADMM run, or (I, I, 0) when disabled."""
    triple, _ = _warm_start(data, params, wcfg, epsilon, admm_config)
    return triple


class PpdnaSolver(Observable):
    """Outer proximal point loop publishing one event per accepted iterate."""

    def __init__(self, data: ProblemData, params: GglParams, config: PpdnaConfig | None = None, admm_config: AdmmConfig | None = None):
        """Initialize the solver; admm_config drives the warm start."""
        super().__init__()
        self.data: ProblemData = data
        self.params: GglParams = params
        self.config: PpdnaConfig = config or PpdnaConfig()
        self.config.validate()
        self.admm_config: AdmmConfig = admm_config or AdmmConfig()

    def _stop_rule(self, eps_t: float, gamma_t: float):
        epsilon = self.config.epsilon

        def stop(state: SubproblemState, evaluation: DualEvaluation) -> bool:
            if not np.isfinite(evaluation.upsilon):
                raise SolverError('subproblem dual value is not finite', diagnostics={'sigma_t': state.sigma_t})
            gap = subproblem_gap(state, evaluation)
            if gap < -WEAK_DUALITY_TOL * (1.0 + abs(evaluation.upsilon)):
                raise RuntimeError(f'weak duality violated in the subproblem: gap {gap:.3e}')
            gap = max(gap, 0.0)
            step_norm = primal_step_norm(state, evaluation)
            accept_a = criterion_holds(Criterion.A, gap, step_norm, eps_t, gamma_t, state.sigma_t)
            accept_b = criterion_holds(Criterion.B, gap, step_norm, eps_t, gamma_t, state.sigma_t)
            if accept_a and accept_b:
                return True
            # an iterate that already meets the outer tolerance ends the solve anyway
            if evaluation.grad_norm <= epsilon * (1.0 + evaluation.theta.norm()):
                if kkt_residual_primal(evaluation.omega, evaluation.theta, evaluation.x, self.data, self.params) <= epsilon:
                    return True
            if evaluation.grad_norm <= GRADIENT_FLOOR * (1.0 + evaluation.omega.norm()):
                logger.warning('accepting subproblem iterate at the gradient floor (|grad| %.3e, gap %.3e)', evaluation.grad_norm, gap)
                return True
            return False

        return stop

    @staticmethod
    def _eta_stagnated(trace: SolveTrace) -> bool:
        etas = [record.eta_p for record in trace]
        if len(etas) <= STALL_WINDOW:
            return False
        return min(etas[-STALL_WINDOW:]) > 0.5 * min(etas[:-STALL_WINDOW])

    def _record(self, trace: SolveTrace, iteration: int, sigma: float, triple: tuple, newton_iters: int, cg_iters: int, started: float, gap: float, reference, stalled: bool = False) -> OuterIterationRecord:
        omega, theta, x = triple
        eta = kkt_residual_primal(omega, theta, x, self.data, self.params)
        pobj = primal_objective(theta, self.data, self.params)
        dobj = dual_objective_projected(x, self.data, self.params)
        distance = relative_distance(triple, reference) if reference is not None else None
        record = OuterIterationRecord(
            iteration=iteration,
            sigma=sigma,
            eta_p=eta,
            pobj=pobj,
            dobj=dobj,
            relgap=relative_gap(pobj, dobj),
            newton_iters=newton_iters,
            cg_iters=cg_iters,
            wall_ms=1000.0 * (time.perf_counter() - started),
            subproblem_gap=gap,
            distance=distance,
            stalled=stalled,
        )
        trace.append(record)
        if self.config.record_iterates:
            trace.iterates.append(triple)
        self.notify_observers(ObserverKeys.OUTER_ITERATION, record)
        return record

    def solve(self, start: tuple | None = None, reference: tuple | None = None) -> PpdnaResult:
        """Run the proximal point loop until eta_P <= epsilon."""
        config, data, params = self.config, self.data, self.params
        trace = SolveTrace()
        started = time.perf_counter()
        if start is None:
            start, trace.warm_start_iters = _warm_start(data, params, config.warm_start, config.epsilon, self.admm_config)
        omega, theta, x = start
        record = self._record(trace, 0, config.sigma0, (omega, theta, x), 0, 0, started, float('nan'), reference)
        anchors = (omega, theta)
        sigma, eps_t, gamma_t = config.sigma0, config.eps0, config.gamma0

        iteration = 0
        stalled_run = 0
        while record.eta_p > config.epsilon:
            if iteration >= config.max_outer_iters:
                raise ConvergenceError(
                    f'PPDNA did not reach eta_p <= {config.epsilon:g} in {config.max_outer_iters} iterations (eta_p {record.eta_p:.3e})',
                    trace=trace,
                    diagnostics={'eta_p': record.eta_p, 'sigma': sigma},
                    last_iterate=(omega, theta, x),
                )
            if stalled_run >= STALL_WINDOW and self._eta_stagnated(trace):
                raise ConvergenceError(
                    f'PPDNA stalled at eta_p {record.eta_p:.3e} above {config.epsilon:g}: subproblems no longer improve in double precision',
                    trace=trace,
                    diagnostics={'eta_p': record.eta_p, 'sigma': sigma, 'stalled_subproblems': stalled_run},
                    last_iterate=(omega, theta, x),
                )
            iteration += 1
            try:
                result = solve_subproblem(anchors, sigma, data, params, self._stop_rule(eps_t, gamma_t), config.newton, x0=x)
            except SolverError as error:
                error.trace = trace
                self.notify_observers(ObserverKeys.ERROR_MESSAGE, str(error))
                raise
            omega, theta, x = result.omega, result.theta_prox, result.x
            anchors = (result.omega, result.theta)
            stalled_run = stalled_run + 1 if result.stats.stalled else 0
            trace.last_grad_history = list(result.stats.grad_history)
            record = self._record(trace, iteration, sigma, (omega, theta, x), result.stats.newton_iters, result.stats.cg_iters, started, result.gap, reference, result.stats.stalled)
            logger.info(
                'PPDNA %d: sigma %.3g, eta_p %.3e, pobj %.10e, relgap %.3e, newton %d, cg %d',
                iteration,
                sigma,
                record.eta_p,
                record.pobj,
                record.relgap,
                record.newton_iters,
                record.cg_iters,
            )
            sigma = min(config.sigma_growth * sigma, config.sigma_max)
            eps_t /= config.schedule_ratio
            gamma_t /= config.schedule_ratio

        trace.converged = True
        self.notify_observers(ObserverKeys.SOLVE_FINISHED, trace)
        return PpdnaResult(omega, theta, x, trace)


def solve(data: ProblemData, params: GglParams, config: PpdnaConfig | None = None, reference: tuple | None = None, admm_config: AdmmConfig | None = None) -> PpdnaResult:
    """Solve the group graphical Lasso problem with PPDNA."""
    return PpdnaSolver(data, params, config, admm_config).solve(reference=reference)
