"""Command line surface: generate, solve, compare, metrics and rate."""

import argparse
import logging

from ggl_solver.controllers.cli_controller import EXIT_IO, EXIT_NO_CONVERGENCE, EXIT_USAGE, CliController
from ggl_solver.errors import DataValidationError, SolverError
from ggl_solver.models.ensemble import GglParams
from ggl_solver.models.run_spec import SOLVERS, RunSpec
from ggl_solver.services.config_service import ConfigService
from ggl_solver.services.datagen import reparam_to_lambda
from ggl_solver.services.file_service import FileService

logger = logging.getLogger(__name__)


def _float_list(text: str) -> list[float]:
    try:
        return [float(value) for value in text.split(',') if value.strip()]
    except ValueError as error:
        raise argparse.ArgumentTypeError(f'expected comma separated numbers, got {text!r}') from error


def _pair_list(text: str) -> list[tuple[float, float]]:
    pairs = []
    for item in text.split(','):
        try:
            lambda1, lambda2 = item.split(':')
            pairs.append((float(lambda1), float(lambda2)))
        except ValueError as error:
            raise argparse.ArgumentTypeError(f'expected lambda1:lambda2 pairs separated by commas, got {item!r}') from error
    return pairs


def _add_penalty_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--lambda1', type=float, help='sparsity weight on every off-diagonal entry')
    parser.add_argument('--lambda2', type=float, help='similarity weight on every cross-class group')
    parser.add_argument('--w1', type=float, help='sparsity level, alternative to --lambda1/--lambda2')
    parser.add_argument('--w2', type=float, help='similarity share in [0, 1)')


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser of all subcommands."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('-v', '--verbose', action='count', default=0, help='print solver progress; twice for debug logging')
    common.add_argument('--config', help='JSON file with newton, warm_start, ppdna and admm sections')
    common.add_argument('--tol', type=float, help='stopping tolerance on the relative KKT residual')
    common.add_argument('--sigma0', type=float, help='initial proximal parameter')
    common.add_argument('--sigma-growth', type=float, help='factor zeta by which sigma grows per outer iteration')
    common.add_argument('--sigma-max', type=float, help='upper bound on sigma')
    common.add_argument('--max-outer-iters', type=int, help='PPDNA outer iteration cap')
    common.add_argument('--no-warm-start', action='store_true', help='start PPDNA from the identity instead of an ADMM warm start')
    common.add_argument('--admm-tau', type=float, help='ADMM dual step length')
    common.add_argument('--admm-max-iters', type=int, help='ADMM iteration cap')

    parser = argparse.ArgumentParser(prog='ggl-solver', description='Group graphical Lasso solvers (PPDNA and ADMM).')
    commands = parser.add_subparsers(dest='command', required=True)

    generate = commands.add_parser('generate', parents=[common], help='generate a synthetic nearest-neighbour problem')
    generate.add_argument('--p', type=int, required=True, help='number of variables')
    generate.add_argument('--K', dest='k_classes', type=int, required=True, help='number of classes')
    generate.add_argument('--samples', type=int, required=True, help='observations drawn per class')
    generate.add_argument('--neighbors', type=int, default=5, help='nearest neighbours of the common network')
    generate.add_argument('--seed', type=int)
    generate.add_argument('--out', required=True)

    solve = commands.add_parser('solve', parents=[common], help='solve one problem')
    solve.add_argument('--manifest', required=True)
    solve.add_argument('--solver', choices=SOLVERS, default='ppdna')
    _add_penalty_flags(solve)
    solve.add_argument('--out', required=True)

    compare = commands.add_parser('compare', parents=[common], help='run both solvers on a penalty grid')
    compare.add_argument('--manifest', nargs='+', required=True, help='one or more problem manifests')
    compare.add_argument('--lambdas', type=_pair_list, help='grid as lambda1:lambda2,lambda1:lambda2,...')
    compare.add_argument('--w1-grid', type=_float_list, help='grid of w1 values at fixed --w2')
    compare.add_argument('--w2', type=float, default=0.0)
    compare.add_argument('--solvers', type=lambda text: tuple(text.split(',')), default=SOLVERS)
    compare.add_argument('--out', required=True)

    metrics = commands.add_parser('metrics', parents=[common], help='evaluate an estimate against a ground truth')
    metrics.add_argument('--estimate', help='solution.json, its directory, or a truth.json')
    metrics.add_argument('--truth', help='truth.json or its directory')
    metrics.add_argument('--sweep', action='store_true', help='solve a w1 grid and emit ROC points')
    metrics.add_argument('--manifest', help='problem manifest for --sweep')
    metrics.add_argument('--w1-grid', type=_float_list, help='w1 values for --sweep')
    metrics.add_argument('--w2', type=float, default=0.0)
    metrics.add_argument('--out', required=True)

    rate = commands.add_parser('rate', parents=[common], help='measure the distance to a 1e-10 reference per iteration')
    rate.add_argument('--manifest', required=True)
    _add_penalty_flags(rate)
    rate.add_argument('--fixed-sigma', type=float, help='keep sigma constant at this value')
    rate.add_argument('--out', required=True)
    return parser


def _grid(args) -> list[GglParams]:
    if args.lambdas and args.w1_grid:
        raise ValueError('give either --lambdas or --w1-grid, not both')
    if args.lambdas:
        return [GglParams(lambda1, lambda2) for lambda1, lambda2 in args.lambdas]
    if args.w1_grid:
        return [reparam_to_lambda(w1, args.w2) for w1 in args.w1_grid]
    raise ValueError('compare needs --lambdas or --w1-grid')


def _run(args) -> int:
    config_service = ConfigService(args.config)
    config_service.apply_overrides(
        epsilon=args.tol,
        sigma0=args.sigma0,
        sigma_growth=args.sigma_growth,
        sigma_max=args.sigma_max,
        max_outer_iters=args.max_outer_iters,
        warm_start=False if args.no_warm_start else None,
        admm_tau=args.admm_tau,
        admm_max_iters=args.admm_max_iters,
    )
    controller = CliController(FileService(), config_service, verbose=args.verbose > 0)

    if args.command == 'generate':
        return controller.cmd_generate(args.p, args.k_classes, args.samples, args.out, seed=args.seed, neighbors=args.neighbors)
    if args.command == 'compare':
        return controller.cmd_compare(args.manifest, _grid(args), args.out, args.solvers)
    if args.command == 'metrics':
        if args.sweep:
            if not args.manifest or not args.w1_grid:
                raise ValueError('--sweep needs --manifest and --w1-grid')
            return controller.cmd_sweep(args.manifest, args.truth, args.w1_grid, args.w2, args.out)
        if not args.estimate:
            raise ValueError('metrics needs --estimate')
        return controller.cmd_metrics(args.estimate, args.truth, args.out)

    spec = RunSpec(
        args.command,
        manifest=args.manifest,
        solver=getattr(args, 'solver', 'ppdna'),
        lambda1=args.lambda1,
        lambda2=args.lambda2,
        w1=args.w1,
        w2=args.w2,
        tol=config_service.ppdna.epsilon,
        out=args.out,
        config_file=args.config,
        verbose=args.verbose > 0,
    )
    if args.command == 'solve':
        return controller.cmd_solve(spec)
    return controller.cmd_rate(spec, fixed_sigma=args.fixed_sigma)


def main(argv: list[str] | None = None) -> int:
    """Run the cli and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as error:
        return error.code if isinstance(error.code, int) else EXIT_USAGE

    level = logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        return _run(args)
    except DataValidationError as error:
        print(f'error: {error}')
        return EXIT_IO
    except ValueError as error:
        print(f'error: {error}')
        return EXIT_USAGE
    except SolverError as error:
        print(f'error: {error}')
        return EXIT_NO_CONVERGENCE
    except RuntimeError as error:
        logger.exception('internal solver check failed')
        print(f'error: {error}')
        return EXIT_NO_CONVERGENCE
    except OSError as error:
        print(f'error: {error}')
        return EXIT_IO
