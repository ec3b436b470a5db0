"""
Semismooth Newton method on the dual of one proximal point subproblem.

For anchors (Omega_t, Theta_t) and step sigma_t the subproblem dual is the concave function

    Upsilon_t(X) = min over (Omega, Theta) of L_t(Omega, Theta; X)
    L_t = f(Omega) + P(Theta) + (|Omega - Omega_t|^2 + |Theta - Theta_t|^2) / (2 sigma_t) + <X, Omega - Theta>

whose minimizers are Omega~ = phi_plus_{sigma_t}(W_t(X)) and Theta^ = Prox_{sigma_t P}(V_t(X)) with
W_t(X) = Omega_t - sigma_t (S + X) and V_t(X) = Theta_t + sigma_t X. The gradient is Omega~ - Theta^.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from ggl_solver.errors import SolverError
from ggl_solver.models.config import NewtonConfig
from ggl_solver.models.ensemble import GglParams, PrecisionEnsemble, ProblemData
from ggl_solver.services.proxops import EnsembleJacobian, ggl_penalty, jac_prox_ggl, prox_ggl
from ggl_solver.services.spectral import EigDecomp, eig_sym, gamma_matrix, phi_plus_dderiv, phi_plus_scalar

logger = logging.getLogger(__name__)

ARMIJO_ROUNDING = 10.0 * np.finfo(float).eps
CG_ROUNDING = 100.0 * np.finfo(float).eps
CG_REFRESH = 25
STALL_WINDOW = 5
STALL_GRADIENT = float(np.sqrt(np.finfo(float).eps))


@dataclass
class DualEvaluation:
    """Everything computed from one dual point X."""

    x: PrecisionEnsemble
    decomp: EigDecomp
    omega: PrecisionEnsemble
    theta: PrecisionEnsemble
    v: PrecisionEnsemble
    upsilon: float
    grad: PrecisionEnsemble
    grad_norm: float


class SubproblemState:
    """Frozen data of one subproblem plus the spectral cache of the current dual iterate."""

    def __init__(self, omega_t: PrecisionEnsemble, theta_t: PrecisionEnsemble, sigma_t: float, data: ProblemData, params: GglParams):
        """Initialize the subproblem."""
        if not sigma_t > 0:
            raise ValueError(f'sigma_t must be positive, got {sigma_t}')
        if omega_t.shape != data.covariances.shape or theta_t.shape != data.covariances.shape:
            raise ValueError('anchor shapes do not match the problem data')
        self.omega_t: PrecisionEnsemble = omega_t
        self.theta_t: PrecisionEnsemble = theta_t
        self.sigma_t: float = float(sigma_t)
        self.data: ProblemData = data
        self.params: GglParams = params
        self.x_current: PrecisionEnsemble | None = None
        self.eig_count: int = 0
        self._current: DualEvaluation | None = None
        self._last_eval: DualEvaluation | None = None
        self._jacobian: EnsembleJacobian | None = None
        self._gamma: np.ndarray | None = None

    @property
    def current(self) -> DualEvaluation:
        """Evaluation at the current iterate."""
        self._check_fresh()
        return self._current

    @property
    def last_evaluation(self) -> DualEvaluation | None:
        """The most recent evaluation, accepted or not."""
        return self._last_eval

    def evaluate(self, x: PrecisionEnsemble) -> DualEvaluation:
        """Evaluate Upsilon_t and its gradient at X with one eigendecomposition per block."""
        sigma = self.sigma_t
        w = self.omega_t.blocks - sigma * (self.data.covariances.blocks + x.blocks)
        decomp = eig_sym(w)
        self.eig_count += self.data.k_classes
        plus = phi_plus_scalar(sigma, decomp.d)
        omega = PrecisionEnsemble.wrap(decomp.apply_scalar(plus))
        v = self.theta_t + sigma * x
        theta = prox_ggl(v, self.params, sigma)

        omega_step = omega - self.omega_t
        theta_step = theta - self.theta_t
        upsilon = (
            -float(np.sum(np.log(plus)))
            + (self.data.covariances + x).inner(omega)
            + ggl_penalty(theta, self.params)
            - x.inner(theta)
            + (omega_step.inner(omega_step) + theta_step.inner(theta_step)) / (2.0 * sigma)
        )
        grad = omega - theta
        evaluation = DualEvaluation(x, decomp, omega, theta, v, upsilon, grad, grad.norm())
        self._last_eval = evaluation
        return evaluation

    def set_iterate(self, x: PrecisionEnsemble) -> DualEvaluation:
        """Move to X, reusing the last evaluation when it was taken at X."""
        if self._last_eval is not None and self._last_eval.x is x:
            evaluation = self._last_eval
        else:
            evaluation = self.evaluate(x)
        self.x_current = x
        self._current = evaluation
        self._jacobian = None
        self._gamma = None
        return evaluation

    def _check_fresh(self) -> None:
        if self._current is None or self._current.x is not self.x_current:
            raise RuntimeError('subproblem cache is stale: call set_iterate after changing x_current')

    def neg_hessian_array(self, d: np.ndarray) -> np.ndarray:
        """Apply -V = sigma_t (phi_plus'(W) + Jacobian of the prox) to a (K, p, p) array."""
        self._check_fresh()
        if self._jacobian is None:
            self._jacobian = jac_prox_ggl(self._current.v, self.params, self.sigma_t)
            self._gamma = gamma_matrix(self.sigma_t, self._current.decomp.d)
        spectral = phi_plus_dderiv(self.sigma_t, self._current.decomp, d, self._gamma)
        return self.sigma_t * (spectral + self._jacobian.apply_array(d))


class DirectionResult(NamedTuple):
    """Outcome of the CG solve for the Newton direction."""

    direction: PrecisionEnsemble
    cg_iters: int
    converged: bool


@dataclass
class NewtonStats:
    """Counters of one subproblem solve."""

    newton_iters: int = 0
    cg_iters: int = 0
    linesearch_evals: int = 0
    eig_count: int = 0
    fallbacks: int = 0
    stalled: bool = False
    grad_norm: float = float('nan')
    grad_history: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        """Convert the counters to a dictionary."""
        return {
            'newton_iters': self.newton_iters,
            'cg_iters': self.cg_iters,
            'linesearch_evals': self.linesearch_evals,
            'eig_count': self.eig_count,
            'fallbacks': self.fallbacks,
            'stalled': self.stalled,
            'grad_norm': float(self.grad_norm),
        }


@dataclass
class SubproblemResult:
    """Primal-dual iterate returned by one subproblem solve."""

    omega: PrecisionEnsemble
    theta: PrecisionEnsemble
    x: PrecisionEnsemble
    stats: NewtonStats
    theta_prox: PrecisionEnsemble
    upsilon: float
    gap: float


def dual_objective(state: SubproblemState, x: PrecisionEnsemble) -> float:
    """Return Upsilon_t(X)."""
    return state.evaluate(x).upsilon


def dual_gradient(state: SubproblemState, x: PrecisionEnsemble) -> PrecisionEnsemble:
    """Return grad Upsilon_t(X) = phi_plus(W_t(X)) - Prox_{sigma_t P}(V_t(X))."""
    return state.evaluate(x).grad


def hessian_apply(state: SubproblemState, d: PrecisionEnsemble) -> PrecisionEnsemble:
    """Apply the generalized Hessian V (negative definite) at the current iterate."""
    return PrecisionEnsemble.wrap(-state.neg_hessian_array(d.blocks))


def recover_primal(state: SubproblemState, x: PrecisionEnsemble) -> tuple[PrecisionEnsemble, PrecisionEnsemble]:
    """Return (Omega~, Theta~) with Theta~ = Omega~ = phi_plus_{sigma_t}(W_t(X))."""
    omega = state.evaluate(x).omega
    return omega, omega


def subproblem_gap(state: SubproblemState, evaluation: DualEvaluation) -> float:
    """
    Return Phi_t(Omega~, Omega~) - Upsilon_t(X).

    The smooth part f cancels exactly, so only the penalty and proximal terms are evaluated.
    """
    omega, theta, x = evaluation.omega, evaluation.theta, evaluation.x
    omega_gap = omega - state.theta_t
    theta_gap = theta - state.theta_t
    return (
        ggl_penalty(omega, state.params)
        - ggl_penalty(theta, state.params)
        - x.inner(omega - theta)
        + (omega_gap.inner(omega_gap) - theta_gap.inner(theta_gap)) / (2.0 * state.sigma_t)
    )


def primal_step_norm(state: SubproblemState, evaluation: DualEvaluation) -> float:
    """Return |(Omega~, Omega~) - (Omega_t, Theta_t)|."""
    return float(np.sqrt((evaluation.omega - state.omega_t).norm() ** 2 + (evaluation.omega - state.theta_t).norm() ** 2))


def _symmetrize(array: np.ndarray) -> np.ndarray:
    return 0.5 * (array + np.swapaxes(array, 1, 2))


def newton_direction(state: SubproblemState, grad: PrecisionEnsemble, config: NewtonConfig) -> DirectionResult:
    """
    Solve (-V)[D] = grad by CG to the forcing tolerance min(eta_bar, |grad|^(1 + tau)).

    CG runs in rounds of CG_REFRESH iterations. After every round the residual is recomputed from
    the operator, and CG restarts from the current D until that true residual meets the tolerance.
    """
    grad_norm = grad.norm()
    if grad_norm == 0:
        return DirectionResult(PrecisionEnsemble.zeros(*grad.shape), 0, True)
    shape = grad.blocks.shape
    size = grad.blocks.size
    rhs = grad.blocks.ravel()

    def matvec(vector: np.ndarray) -> np.ndarray:
        return _symmetrize(state.neg_hessian_array(_symmetrize(vector.reshape(shape)))).ravel()

    operator = LinearOperator((size, size), matvec=matvec, dtype=float)
    forcing = min(config.eta_bar, grad_norm ** (1.0 + config.tau))
    iterations = [0]

    def count(_):
        iterations[0] += 1

    solution = np.zeros(size)
    while True:
        before = iterations[0]
        rounds = min(CG_REFRESH, config.max_cg_iters - before)
        solution, _ = cg(operator, rhs, x0=solution, rtol=0.0, atol=forcing, maxiter=rounds, callback=count)
        residual = float(np.linalg.norm(rhs - operator.matvec(solution)))
        # |-V| <= 2 sigma_t bounds the rounding error of the recomputed residual
        tolerance = max(forcing, CG_ROUNDING * (grad_norm + 2.0 * state.sigma_t * float(np.linalg.norm(solution))))
        if residual <= tolerance or iterations[0] >= config.max_cg_iters or iterations[0] == before:
            break
        logger.debug('CG restart after %d iterations: true residual %.3e above %.3e', iterations[0], residual, tolerance)

    direction = PrecisionEnsemble.wrap(_symmetrize(solution.reshape(shape)))
    logger.debug('CG: %d iterations, true residual %.3e (target %.3e)', iterations[0], residual, tolerance)
    converged = residual <= tolerance and grad.inner(direction) > 0
    if residual > tolerance:
        logger.warning('CG stopped after %d iterations with true residual %.3e above %.3e', iterations[0], residual, tolerance)
    return DirectionResult(direction, iterations[0], converged)


def line_search(state: SubproblemState, x: PrecisionEnsemble, d: PrecisionEnsemble, grad: PrecisionEnsemble, config: NewtonConfig) -> tuple[float, int]:
    """
    Backtrack alpha = rho^m until the Armijo condition holds; the accepted trial is state.last_evaluation.

    Returns alpha = 0 once the step alpha * D drops below the rounding level of X; X is then left unchanged.
    """
    slope = grad.inner(d)
    if slope < 0:
        raise ValueError(f'line search needs an ascent direction, got slope {slope:.3e}')
    base = state.evaluate(x).upsilon if state.x_current is not x else state.current.upsilon
    slack = ARMIJO_ROUNDING * (1.0 + abs(base))
    negligible = np.finfo(float).eps * (1.0 + x.norm())
    direction_norm = d.norm()
    alpha = 1.0
    for m in range(config.max_linesearch_steps + 1):
        trial = state.evaluate(x + alpha * d)
        if trial.upsilon >= base + config.mu * alpha * slope - slack:
            return alpha, m + 1
        alpha *= config.rho
        if alpha * direction_norm <= negligible:
            return 0.0, m + 1
    raise SolverError(
        f'line search failed after {config.max_linesearch_steps} backtracking steps',
        diagnostics={'slope': slope, 'upsilon': base, 'grad_norm': grad.norm(), 'direction_norm': d.norm()},
    )


def _attainable_gradient(evaluation: DualEvaluation) -> float:
    # eigh of W is exact to about eps |W| and phi_plus is nonexpansive
    return STALL_GRADIENT * (1.0 + evaluation.omega.norm()) + CG_ROUNDING * float(np.linalg.norm(evaluation.decomp.d))


def stagnated(grad_history: list[float], evaluation: DualEvaluation) -> bool:
    """True once |grad| is at rounding level and has not halved over the last STALL_WINDOW Newton iterations."""
    if len(grad_history) <= STALL_WINDOW or evaluation.grad_norm > _attainable_gradient(evaluation):
        return False
    return min(grad_history[-STALL_WINDOW:]) >= 0.5 * min(grad_history[:-STALL_WINDOW])


StopRule = Callable[[SubproblemState, DualEvaluation], bool]


def solve_subproblem(
    anchors: tuple[PrecisionEnsemble, PrecisionEnsemble],
    sigma_t: float,
    data: ProblemData,
    params: GglParams,
    stop: StopRule,
    config: NewtonConfig,
    x0: PrecisionEnsemble | None = None,
) -> SubproblemResult:
    """Maximize Upsilon_t from x0 until the stopping rule accepts the recovered primal iterate."""
    omega_t, theta_t = anchors
    state = SubproblemState(omega_t, theta_t, sigma_t, data, params)
    x = x0 if x0 is not None else PrecisionEnsemble.zeros(data.k_classes, data.dim)
    evaluation = state.set_iterate(x)
    stats = NewtonStats()
    stats.grad_history.append(evaluation.grad_norm)

    while not stop(state, evaluation):
        if stagnated(stats.grad_history, evaluation):
            logger.warning('Newton stalled at |grad| %.3e after %d iterations, accepting the iterate', evaluation.grad_norm, stats.newton_iters)
            stats.stalled = True
            break
        if stats.newton_iters >= config.max_newton_iters:
            stats.eig_count = state.eig_count
            stats.grad_norm = evaluation.grad_norm
            raise SolverError(
                f'semismooth Newton did not meet the stopping rule in {config.max_newton_iters} iterations',
                diagnostics={**stats.to_dict(), 'sigma_t': sigma_t},
            )
        result = newton_direction(state, evaluation.grad, config)
        stats.cg_iters += result.cg_iters
        direction = result.direction
        if not result.converged:
            logger.warning('falling back to steepest ascent at Newton iteration %d', stats.newton_iters)
            stats.fallbacks += 1
            direction = evaluation.grad
        alpha, evals = line_search(state, x, direction, evaluation.grad, config)
        stats.linesearch_evals += evals
        if alpha == 0.0:
            if evaluation.grad_norm > _attainable_gradient(evaluation):
                stats.eig_count = state.eig_count
                stats.grad_norm = evaluation.grad_norm
                raise SolverError('line search step vanished before the gradient reached rounding level', diagnostics={**stats.to_dict(), 'sigma_t': sigma_t})
            logger.warning('Newton step vanished at |grad| %.3e, accepting the iterate', evaluation.grad_norm)
            stats.stalled = True
            break
        x = state.last_evaluation.x
        evaluation = state.set_iterate(x)
        stats.newton_iters += 1
        stats.grad_history.append(evaluation.grad_norm)
        logger.debug('Newton %d: upsilon %.10e, |grad| %.3e, alpha %.3g', stats.newton_iters, evaluation.upsilon, evaluation.grad_norm, alpha)

    stats.eig_count = state.eig_count
    stats.grad_norm = evaluation.grad_norm
    return SubproblemResult(
        omega=evaluation.omega,
        theta=evaluation.omega,
        x=x,
        stats=stats,
        theta_prox=evaluation.theta,
        upsilon=evaluation.upsilon,
        gap=subproblem_gap(state, evaluation),
    )
