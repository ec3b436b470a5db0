"""CliController for the ggl-solver command line."""

import copy
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pandas as pd

from ggl_solver.errors import ConvergenceError, GglError
from ggl_solver.models.config import AdmmConfig, PpdnaConfig
from ggl_solver.models.ensemble import GglParams, PrecisionEnsemble, ProblemData
from ggl_solver.models.run_spec import SOLVERS, RunSpec
from ggl_solver.services.admm import AdmmSolver, admm_primal_triple
from ggl_solver.services.config_service import ConfigService
from ggl_solver.services.datagen import gen_nn_network, load_problem, reparam_to_lambda, sample_covariance, sample_gaussian
from ggl_solver.services.evalmetrics import edge_report, nnz_density
from ggl_solver.services.file_service import FileService
from ggl_solver.services.objectives import dual_objective_projected, primal_objective, relative_gap
from ggl_solver.services.ppdna import PpdnaSolver, kkt_residual_primal
from ggl_solver.utils.observer import Observer, ObserverKeys

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_CONVERGENCE = 3
EXIT_IO = 4

REFERENCE_EPSILON = 1e-10
THREADS_VARIABLE = 'GGL_SOLVER_THREADS'
COMPARE_COLUMNS = ['instance', 'lambda1', 'lambda2', 'solver', 'density', 'iterations', 'time', 'eta', 'pobj', 'relgap', 'pobj_rel_diff', 'status']
ROC_COLUMNS = ['w1', 'w2', 'lambda1', 'lambda2', 'tp', 'fp', 'tp_diff', 'fp_diff', 'sse', 'selected', 'status']


class SolveOutcome:
    """Final triple of either solver with the numbers every report needs."""

    def __init__(self, solver: str, triple: tuple, trace, converged: bool, data: ProblemData, params: GglParams):
        """Initialize the outcome and evaluate the final triple."""
        self.solver: str = solver
        self.omega, self.theta, self.x = triple
        self.trace = trace
        self.converged: bool = converged
        self.pobj: float = primal_objective(self.theta, data, params)
        self.dobj: float = dual_objective_projected(self.x, data, params)
        self.relgap: float = relative_gap(self.pobj, self.dobj)
        self.eta: float = kkt_residual_primal(self.omega, self.theta, self.x, data, params)
        self.nnz, self.density = nnz_density(self.theta)

    @property
    def wall_ms(self) -> float:
        """Wall time of the solve in milliseconds."""
        last = self.trace.last
        return float(last.wall_ms) if last else 0.0

    def iterations_label(self) -> str:
        """Outer iterations, with total Newton iterations in parentheses for PPDNA."""
        if self.solver == 'ppdna':
            return f'{self.trace.outer_iters}({self.trace.total_newton_iters})'
        return str(self.trace.iterations)

    def to_dict(self) -> dict:
        """Convert the outcome to the summary dictionary."""
        summary = {
            'solver': self.solver,
            'converged': bool(self.converged),
            'pobj': float(self.pobj),
            'dobj': float(self.dobj),
            'relgap': float(self.relgap),
            'eta': float(self.eta),
            'wall_ms': self.wall_ms,
            'nnz': int(self.nnz),
            'density': float(self.density),
        }
        if self.solver == 'ppdna':
            summary['iterations'] = self.trace.outer_iters
            summary['newton_iters'] = self.trace.total_newton_iters
            summary['cg_iters'] = self.trace.total_cg_iters
            summary['warm_start_iters'] = int(self.trace.warm_start_iters)
        else:
            summary['iterations'] = int(self.trace.iterations)
        return summary


def thread_count() -> int:
    """Worker count of the compare command from the environment."""
    value = os.environ.get(THREADS_VARIABLE, '1')
    try:
        threads = int(value)
    except ValueError as error:
        raise ValueError(f'{THREADS_VARIABLE} must be a positive integer, got {value!r}') from error
    if threads < 1:
        raise ValueError(f'{THREADS_VARIABLE} must be a positive integer, got {value!r}')
    return threads


class CliController(Observer):
    """Run the cli commands on top of the file, configuration and solver services."""

    def __init__(self, file_service: FileService, config_service: ConfigService, verbose: bool = False):
        """Initialize the controller."""
        self.file_service: FileService = file_service
        self.config_service: ConfigService = config_service
        self.verbose: bool = verbose

    def updateObservable(self, observable, *args, **kwargs):
        """Echo solver progress when verbose."""
        if not self.verbose:
            return
        key, payload = args[0], args[1] if len(args) > 1 else None
        if key == ObserverKeys.OUTER_ITERATION:
            print(f'  iter {payload.iteration:3d}  sigma {payload.sigma:9.3g}  eta_p {payload.eta_p:9.3e}  relgap {payload.relgap:9.3e}  newton {payload.newton_iters}')
        elif key == ObserverKeys.ADMM_ITERATION:
            print(f'  iter {payload.iteration:5d}  sigma {payload.sigma:9.3g}  eta_a {payload.eta_a:9.3e}')
        elif key == ObserverKeys.ERROR_MESSAGE:
            print(f'  error: {payload}')

    def _ppdna_config(self) -> PpdnaConfig:
        return copy.deepcopy(self.config_service.ppdna)

    def _admm_config(self) -> AdmmConfig:
        return copy.deepcopy(self.config_service.admm)

    def _run_solver(self, solver: str, data: ProblemData, params: GglParams, ppdna_config: PpdnaConfig | None = None, reference: tuple | None = None, observe: bool = True) -> SolveOutcome:
        """Run one solver; an outer-iteration cap returns the last iterate with converged=False."""
        if solver == 'ppdna':
            ppdna = PpdnaSolver(data, params, ppdna_config or self._ppdna_config(), self._admm_config())
            if observe:
                ppdna.add_observer(self)
            try:
                result = ppdna.solve(reference=reference)
            except ConvergenceError as error:
                logger.warning('%s', error)
                return SolveOutcome(solver, error.last_iterate, error.trace, False, data, params)
            return SolveOutcome(solver, (result.omega, result.theta, result.x), result.trace, True, data, params)

        admm = AdmmSolver(data, params, self._admm_config())
        if observe:
            admm.add_observer(self)
        result = admm.solve()
        triple = admm_primal_triple(result.x, result.z, result.theta, data, params)
        return SolveOutcome(solver, triple, result.trace, result.trace.converged, data, params)

    def cmd_generate(self, p: int, k_classes: int, samples: int, out: str, seed: int | None = None, neighbors: int = 5) -> int:
        """Generate a synthetic problem with its ground truth."""
        truth = gen_nn_network(p, k_classes, neighbors=neighbors, seed=seed)
        observations = sample_gaussian(truth, samples, seed)
        covariances = PrecisionEnsemble(np.array([sample_covariance(w) for w in observations]))
        manifest_path = self.file_service.write_problem(out, covariances, [samples] * k_classes)
        self.file_service.write_truth(os.path.join(out, 'truth'), truth)
        print(f'wrote {manifest_path}: p={p}, K={k_classes}, n={samples}, N={truth.n_common} common edges, edges per class {truth.edge_counts()}')
        return EXIT_OK

    def cmd_solve(self, spec: RunSpec) -> int:
        """Solve one problem and write solution, trace and summary."""
        spec.validate()
        params = spec.params()
        data = load_problem(spec.manifest, self.file_service)
        outcome = self._run_solver(spec.solver, data, params)

        self.file_service.write_solution(spec.out, outcome.theta)
        outcome.trace.to_csv(os.path.join(spec.out, 'trace.csv'))
        summary = outcome.to_dict()
        summary['params'] = params.to_dict()
        summary['config'] = self.config_service.to_dict()
        self.file_service.write_json(os.path.join(spec.out, 'summary.json'), summary)

        status = 'converged' if outcome.converged else 'iteration cap reached'
        print(f'{spec.solver}: {status}, iterations {outcome.iterations_label()}, eta {outcome.eta:.3e}, pobj {outcome.pobj:.10e}, relgap {outcome.relgap:.3e}')
        return EXIT_OK if outcome.converged else EXIT_NO_CONVERGENCE

    def _compare_cell(self, instance: str, data: ProblemData, params: GglParams, solver: str) -> dict:
        row = {'instance': instance, 'lambda1': params.lambda1, 'lambda2': params.lambda2, 'solver': solver}
        try:
            outcome = self._run_solver(solver, data, params, observe=False)
        except (GglError, ValueError, RuntimeError, np.linalg.LinAlgError) as error:
            logger.error('%s failed on %s at %s: %s', solver, instance, params, error)
            row.update({'status': f'failed: {error}'})
            return row
        row.update(
            {
                'density': outcome.density,
                'iterations': outcome.iterations_label(),
                'time': outcome.wall_ms / 1000.0,
                'eta': outcome.eta,
                'pobj': outcome.pobj,
                'relgap': outcome.relgap,
                'status': 'converged' if outcome.converged else 'max_iter',
            }
        )
        return row

    def cmd_compare(self, manifests: list[str], grid: list[GglParams], out: str, solvers: tuple[str, ...] = ('ppdna', 'admm')) -> int:
        """Run every solver on every (instance, penalty) pair and write one table row per cell."""
        if not grid:
            raise ValueError('compare needs at least one penalty pair')
        unknown = [solver for solver in solvers if solver not in SOLVERS]
        if unknown:
            raise ValueError(f'unknown solvers {unknown}, expected a subset of {SOLVERS}')
        problems = [(manifest, load_problem(manifest, self.file_service)) for manifest in manifests]
        cells = [(manifest, data, params, solver) for manifest, data in problems for params in grid for solver in solvers]
        with ThreadPoolExecutor(max_workers=thread_count()) as executor:
            rows = list(executor.map(lambda cell: self._compare_cell(*cell), cells))

        table = pd.DataFrame(rows).reindex(columns=COMPARE_COLUMNS)
        # cross-solver objective agreement per (instance, lambda1, lambda2)
        for _, group in table.groupby(['instance', 'lambda1', 'lambda2'], sort=False):
            objectives = group['pobj'].dropna()
            if len(objectives) == 2:
                first, second = objectives.to_numpy()
                table.loc[group.index, 'pobj_rel_diff'] = abs(first - second) / (1.0 + abs(first) + abs(second))

        self.file_service.ensure_dir(out)
        table_path = os.path.join(out, 'compare.csv')
        table.to_csv(table_path, index=False)
        failed = int(table['status'].str.startswith('failed').sum())
        print(f'wrote {table_path}: {len(table)} rows, {failed} failed')
        return EXIT_OK

    def cmd_metrics(self, estimate: str, truth: str, out: str) -> int:
        """Evaluate an estimate against a ground truth and write metrics.json."""
        if truth is None or not os.path.exists(truth):
            raise ValueError(f'ground truth not found: {truth}')
        report = edge_report(self.file_service.read_estimate(estimate), self.file_service.read_truth(truth))
        self.file_service.ensure_dir(out)
        metrics_path = os.path.join(out, 'metrics.json')
        self.file_service.write_json(metrics_path, report.to_dict())
        print(f'tp {report.tp}, fp {report.fp}, fn {report.fn}, tp_diff {report.tp_diff}, fp_diff {report.fp_diff}, sse {report.sse:.6g}, density {report.density:.4f}')
        return EXIT_OK

    def cmd_sweep(self, manifest: str, truth: str, w1_grid: list[float], w2: float, out: str) -> int:
        """Solve a w1 grid at fixed w2 with PPDNA and write one ROC point per grid value."""
        if truth is None or not os.path.exists(truth):
            raise ValueError(f'ground truth not found: {truth}')
        if not w1_grid:
            raise ValueError('sweep needs at least one w1 value')
        ground_truth = self.file_service.read_truth(truth)
        data = load_problem(manifest, self.file_service)
        rows = []
        for w1 in w1_grid:
            params = reparam_to_lambda(w1, w2)
            row = {'w1': w1, 'w2': w2, 'lambda1': params.lambda1, 'lambda2': params.lambda2}
            try:
                outcome = self._run_solver('ppdna', data, params, observe=False)
            except (GglError, RuntimeError, np.linalg.LinAlgError) as error:
                logger.error('sweep point w1=%g failed: %s', w1, error)
                rows.append({**row, 'status': f'failed: {error}'})
                continue
            report = edge_report(outcome.theta, ground_truth)
            row.update({'tp': report.tp, 'fp': report.fp, 'tp_diff': report.tp_diff, 'fp_diff': report.fp_diff, 'sse': report.sse, 'selected': report.selected})
            row['status'] = 'converged' if outcome.converged else 'max_iter'
            rows.append(row)

        self.file_service.ensure_dir(out)
        roc_path = os.path.join(out, 'roc.csv')
        pd.DataFrame(rows).reindex(columns=ROC_COLUMNS).to_csv(roc_path, index=False)
        print(f'wrote {roc_path}: {len(rows)} points')
        return EXIT_OK

    def cmd_rate(self, spec: RunSpec, fixed_sigma: float | None = None) -> int:
        """Solve to 1e-10 for a reference, re-solve under a sigma policy and write the distance series."""
        spec.validate()
        params = spec.params()
        data = load_problem(spec.manifest, self.file_service)

        reference_config = self._ppdna_config()
        reference_config.epsilon = REFERENCE_EPSILON
        reference = self._run_solver('ppdna', data, params, reference_config, observe=False)
        if not reference.converged:
            logger.warning('reference solve stopped at eta %.3e above %.0e', reference.eta, REFERENCE_EPSILON)

        config = self._ppdna_config()
        if fixed_sigma is not None:
            config.sigma0 = fixed_sigma
            config.sigma_max = fixed_sigma
            config.sigma_growth = 1.0
        config.validate()
        outcome = self._run_solver('ppdna', data, params, config, reference=(reference.omega, reference.theta, reference.x))

        self.file_service.ensure_dir(spec.out)
        distances = [(record.iteration, record.distance) for record in outcome.trace if record.distance is not None]
        frame = pd.DataFrame(distances, columns=['t', 'd_t'])
        frame['log10_d'] = [math.log10(d) if d > 0 else -math.inf for d in frame['d_t']]
        frame.to_csv(os.path.join(spec.out, 'rate.csv'), index=False)
        outcome.trace.to_csv(os.path.join(spec.out, 'trace.csv'))
        policy = f'fixed sigma {fixed_sigma:g}' if fixed_sigma is not None else f'sigma growth {config.sigma_growth:g}'
        print(f'rate ({policy}): {len(frame)} points, final d_t {frame["d_t"].iloc[-1]:.3e}')
        return EXIT_OK if outcome.converged else EXIT_NO_CONVERGENCE
