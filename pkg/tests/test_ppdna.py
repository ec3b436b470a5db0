import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ggl_solver.errors import ConvergenceError
from ggl_solver.models.config import AdmmConfig, PpdnaConfig, WarmStartConfig
from ggl_solver.models.ensemble import GglParams, PrecisionEnsemble, ProblemData
from ggl_solver.models.trace import SolveTrace
from ggl_solver.services import ppdna as ppdna_service
from ggl_solver.services.admm import AdmmSolver, admm_primal_triple, solve_admm
from ggl_solver.services.datagen import gen_nn_network, sample_covariance, sample_gaussian
from ggl_solver.services.evalmetrics import nnz_density
from ggl_solver.services.objectives import primal_objective
from ggl_solver.services.ppdna import (
    Criterion,
    PpdnaSolver,
    check_criterion,
    criterion_holds,
    dual_objective_global,
    kkt_residual_primal,
    phi_value,
    solve,
    warm_start,
)
from ggl_solver.utils.observer import Observer, ObserverKeys

from tests.helpers import random_problem

PARAMS = GglParams(0.05, 0.02)


class RecordingObserver(Observer):
    def __init__(self):
        self.events = []

    def updateObservable(self, observable, *args, **kwargs):
        self.events.append(args)


def test_criterion_arithmetic():
    assert criterion_holds(Criterion.A, 0.1, 1.0, 0.5, 0.5, 1.0)
    assert not criterion_holds(Criterion.B, 0.2, 1.0, 0.5, 0.5, 1.0)
    for kind in Criterion:
        assert criterion_holds(kind, 0.0, 0.0, 1e-9, 1e-9, 1e8)
    assert criterion_holds("A'", 0.1, 1.0, 0.5, 0.5, 1.0)


def test_check_criterion_guards_weak_duality():
    assert check_criterion(Criterion.A, 1.0, 1.0 - 1e-3, 1.0, 0.5, 0.5, 1.0)
    with pytest.raises(RuntimeError):
        check_criterion(Criterion.A, 0.0, 1.0, 1.0, 0.5, 0.5, 1.0)


def test_phi_value_examples():
    identity = PrecisionEnsemble.identity(2, 3)
    data = ProblemData(PrecisionEnsemble.zeros(2, 3))
    assert_allclose(phi_value(identity, identity, (identity, identity), 1.0, data, GglParams(0.0, 0.0)), 0.0, atol=1e-15)

    two = PrecisionEnsemble([[[2.0]]])
    one = PrecisionEnsemble([[[1.0]]])
    scalar_data = ProblemData(PrecisionEnsemble.zeros(1, 1))
    assert_allclose(phi_value(two, two, (one, one), 1.0, scalar_data, GglParams(0.0, 0.0)), 1.0 - math.log(2.0), rtol=1e-14)


def test_phi_value_requires_equal_blocks():
    identity = PrecisionEnsemble.identity(1, 2)
    with pytest.raises(ValueError):
        phi_value(identity, 2 * identity, (identity, identity), 1.0, ProblemData(identity), GglParams(0.1, 0.1))


def test_kkt_residual_at_a_closed_form_point():
    identity = PrecisionEnsemble.identity(2, 4)
    data = ProblemData(identity)
    zero = PrecisionEnsemble.zeros(2, 4)
    assert kkt_residual_primal(identity, identity, zero, data, GglParams(0.0, 0.0)) <= 1e-12

    delta = 1e-3
    theta = identity + delta * PrecisionEnsemble.identity(2, 4)
    assert kkt_residual_primal(identity, theta, zero, data, GglParams(0.0, 0.0)) >= (theta - identity).norm() / (1 + theta.norm())


def test_dual_objective_global():
    data = ProblemData(PrecisionEnsemble.identity(3, 4))
    params = GglParams(0.1, 0.1)
    assert_allclose(dual_objective_global(PrecisionEnsemble.zeros(3, 4), data, params), 12.0)
    assert dual_objective_global(0.01 * PrecisionEnsemble.identity(3, 4), data, params) == float('-inf')


def test_warm_start_disabled_returns_identity_start():
    data = ProblemData(PrecisionEnsemble.identity(2, 3))
    omega, theta, x = warm_start(data, PARAMS, WarmStartConfig(enabled=False))
    assert omega.is_close(PrecisionEnsemble.identity(2, 3))
    assert theta.is_close(PrecisionEnsemble.identity(2, 3))
    assert x.norm() == 0.0


def test_identity_covariances_give_identity_solution(identity_problem):
    result = solve(identity_problem, GglParams(0.3, 0.2))
    assert result.trace.converged
    assert_allclose(result.theta.blocks, PrecisionEnsemble.identity(3, 6).blocks, atol=1e-6)
    assert kkt_residual_primal(result.omega, result.theta, result.x, identity_problem, GglParams(0.3, 0.2)) <= 1e-6


def test_identity_covariances_from_cold_start(identity_problem):
    config = PpdnaConfig(warm_start=WarmStartConfig(enabled=False))
    result = solve(identity_problem, GglParams(0.3, 0.2), config)
    assert_allclose(result.theta.blocks, PrecisionEnsemble.identity(3, 6).blocks, atol=1e-6)
    assert result.trace.outer_iters == 0


def test_huge_lambda1_gives_diagonal_solution(rng):
    data = random_problem(rng, 2, 6)
    params = GglParams(1e3 * data.max_offdiagonal(), 0.01)
    result = solve(data, params, PpdnaConfig(epsilon=1e-9))
    assert_allclose(result.theta.upper_groups(), 0.0, atol=1e-12)
    assert_allclose(result.theta.diagonal_groups(), 1.0 / data.covariances.diagonal_groups(), atol=1e-6)


def test_random_problem_converges_with_small_gap(rng):
    data = random_problem(rng, 2, 8)
    solver = PpdnaSolver(data, PARAMS)
    observer = RecordingObserver()
    solver.add_observer(observer)
    result = solver.solve()

    trace = result.trace
    assert trace.converged
    assert trace.last.eta_p <= 1e-6
    assert trace.last.relgap <= 1e-5
    assert kkt_residual_primal(result.omega, result.theta, result.x, data, PARAMS) <= 1e-6
    assert np.linalg.eigvalsh(result.omega.blocks).min() > 0
    assert trace.to_frame().columns.tolist() == SolveTrace.COLUMNS
    assert [event[0] for event in observer.events].count(ObserverKeys.OUTER_ITERATION) == len(trace)
    assert observer.events[-1][0] == ObserverKeys.SOLVE_FINISHED


def test_accepted_subproblems_meet_the_inexactness_schedule(rng):
    data = random_problem(rng, 2, 8)
    config = PpdnaConfig(warm_start=WarmStartConfig(enabled=False))
    trace = solve(data, PARAMS, config).trace
    # the last iterate may be accepted by the outer tolerance instead
    for record in trace.records[1:-1]:
        if record.stalled:
            continue
        eps_t = config.eps0 / config.schedule_ratio ** (record.iteration - 1)
        assert record.subproblem_gap <= eps_t**2 / (2 * record.sigma) + 1e-10
    sigmas = [record.sigma for record in trace.records[1:]]
    assert all(later >= earlier for earlier, later in zip(sigmas, sigmas[1:]))


def test_matches_admm_objective(rng):
    data = random_problem(rng, 3, 8)
    ppdna = solve(data, PARAMS)
    admm = solve_admm(data, PARAMS, AdmmConfig(tol=1e-8))
    assert admm.trace.converged
    p_obj = primal_objective(ppdna.theta, data, PARAMS)
    _, admm_theta, _ = admm_primal_triple(admm.x, admm.z, admm.theta, data, PARAMS)
    a_obj = primal_objective(admm_theta, data, PARAMS)
    assert abs(p_obj - a_obj) / (1 + abs(p_obj) + abs(a_obj)) <= 1e-5
    assert (ppdna.theta - admm_theta).norm() <= 1e-4 * (1 + ppdna.theta.norm())


def test_distance_to_reference_is_recorded(rng):
    data = random_problem(rng, 2, 6)
    reference = solve(data, PARAMS, PpdnaConfig(epsilon=1e-10))
    config = PpdnaConfig(record_iterates=True, warm_start=WarmStartConfig(enabled=False))
    result = solve(data, PARAMS, config, reference=(reference.omega, reference.theta, reference.x))
    distances = result.trace.distances()
    assert len(distances) == len(result.trace) == len(result.trace.iterates)
    assert distances[-1] < distances[0]
    assert distances[-1] <= 1e-4


def test_outer_iteration_cap_raises_with_last_iterate(rng):
    data = random_problem(rng, 2, 6)
    config = PpdnaConfig(epsilon=1e-12, max_outer_iters=1, warm_start=WarmStartConfig(enabled=False))
    with pytest.raises(ConvergenceError) as error:
        solve(data, PARAMS, config)
    omega, theta, x = error.value.last_iterate
    assert theta.shape == (2, 6)
    assert error.value.trace.outer_iters == 1
    assert not error.value.trace.converged


def test_config_validation():
    with pytest.raises(ValueError):
        PpdnaSolver(ProblemData(PrecisionEnsemble.identity(1, 2)), PARAMS, PpdnaConfig(sigma_growth=0.5))


@pytest.fixture
def nn_problem():
    truth = gen_nn_network(12, 2, seed=3)
    covariances = np.array([sample_covariance(w) for w in sample_gaussian(truth, 60, 3)])
    return ProblemData(covariances, [60, 60])


def test_cold_start_on_a_generated_network(nn_problem):
    config = PpdnaConfig(warm_start=WarmStartConfig(enabled=False))
    trace = solve(nn_problem, PARAMS, config).trace
    assert trace.converged
    assert trace.last.eta_p <= 1e-6


def test_tight_tolerance_ends_near_attainable_precision(nn_problem):
    config = PpdnaConfig(epsilon=1e-10, warm_start=WarmStartConfig(enabled=False))
    try:
        trace = solve(nn_problem, PARAMS, config).trace
    except ConvergenceError as error:
        trace = error.trace
    assert trace.last.eta_p <= 1e-7


def test_weak_duality_violation_is_an_internal_error(nn_problem, monkeypatch):
    monkeypatch.setattr(ppdna_service, 'subproblem_gap', lambda state, evaluation: -1.0)
    with pytest.raises(RuntimeError, match='weak duality'):
        solve(nn_problem, PARAMS, PpdnaConfig(warm_start=WarmStartConfig(enabled=False)))


def test_warm_start_runs_the_configured_admm(identity_problem, monkeypatch):
    seen = []

    class RecordingAdmm(AdmmSolver):
        def __init__(self, data, params, config=None):
            seen.append(config)
            super().__init__(data, params, config)

    monkeypatch.setattr(ppdna_service, 'AdmmSolver', RecordingAdmm)
    admm = AdmmConfig(sigma=3.0, tau=1.2, adapt=False)
    warm_start(identity_problem, PARAMS, WarmStartConfig(max_iters=40, tol_multiplier=100.0), 1e-6, admm)
    config = seen[0]
    assert (config.sigma, config.tau, config.adapt) == (3.0, 1.2, False)
    assert config.tol == pytest.approx(1e-4)
    assert config.max_iters == 40
    assert (admm.tol, admm.max_iters) == (1e-6, 20000)

    seen.clear()
    PpdnaSolver(identity_problem, PARAMS, admm_config=admm).solve()
    assert seen[0].sigma == 3.0


def test_nnz_is_nonincreasing_in_lambda1(rng):
    data = random_problem(rng, 2, 8)
    counts = [nnz_density(solve(data, GglParams(lambda1, 0.02)).theta)[0] for lambda1 in (0.01, 0.03, 0.06, 0.1, 0.2)]
    assert all(later <= earlier for earlier, later in zip(counts, counts[1:]))
    assert counts[-1] < counts[0]
