"""Command-line interface: analyze a case at one loading level, run loading sweeps, and verify the
equivalence of the conventional and reduced Wirtinger Jacobians.

Exit codes:

* 0: Success
* 1: Invalid input (unreadable case, bad flags, empty loading range)
* 2: The power flow did not converge
* 3: Equivalence verification failed at one or more loading levels
"""
import sys
from argparse import ArgumentParser, Namespace
from logging import getLogger
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from pywirtinger.casemodel import load_case_file, scale_loading
from pywirtinger.constants import (
    BOUNDARY_PREDICATES,
    CW_ROW,
    CW_VARIANTS,
    DEFAULT_BISECTION_TOLERANCE,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE,
    DEFAULT_WORKERS,
    LOADS_ONLY,
    OUTPUT_FORMATS,
    SCALING_TARGETS,
)
from pywirtinger.converters import parse_bus_value, parse_lambda_range
from pywirtinger.equivalence import verify
from pywirtinger.exceptions import DidNotConverge, ModeOscillation, SingularColumnMap, WirtingerError
from pywirtinger.formatters import enable_logging, print_report, render_csv, render_json
from pywirtinger.models import (
    ConstraintProfile,
    EquivalenceReport,
    NetworkCase,
    ReportDocument,
    SolverOptions,
)
from pywirtinger.powerflow import enforce_current_limits, newton_solve
from pywirtinger.sweep import evaluate_point, mode_transitions, run_sweep

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_NOT_CONVERGED = 2
EXIT_VERIFY_FAILED = 3

logger = getLogger(__name__)


class InputError(ValueError):
    """Invalid command-line input"""


# Argument parsing
# --------------------


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog='pywirtinger',
        description='Voltage stability analysis with the reduced Wirtinger power flow Jacobian',
    )
    subparsers = parser.add_subparsers(dest='command', required=True)

    analyze = subparsers.add_parser('analyze', help='Analyze a case at one loading level')
    _add_common_args(analyze, default_lambda='1.0')
    analyze.add_argument(
        '--scr-actual-voltage',
        action='store_true',
        help='Use actual bus voltage magnitudes in the SCR instead of 1.0 p.u.',
    )

    sweep = subparsers.add_parser('sweep', help='Evaluate a case over a range of loading levels')
    _add_common_args(sweep, default_lambda=None)
    sweep.add_argument(
        '--find-boundary',
        action='append',
        default=[],
        choices=BOUNDARY_PREDICATES,
        help='Locate a stability boundary by bisection (may be repeated)',
    )
    sweep.add_argument(
        '--bisection-tol',
        type=float,
        default=DEFAULT_BISECTION_TOLERANCE,
        help=f'Loading tolerance for boundary bisection (default: {DEFAULT_BISECTION_TOLERANCE:g})',
    )
    sweep.add_argument(
        '--flat-start',
        action='store_true',
        help='Solve each level from a flat start, in parallel, instead of warm-starting',
    )
    sweep.add_argument('--workers', type=int, default=DEFAULT_WORKERS, help='Flat-start threads')
    sweep.add_argument('--csv', type=Path, help='Also write per-bus rows as CSV to this path')

    verify_cmd = subparsers.add_parser(
        'verify', help='Check that J_conv = L J_red R at one or more loading levels'
    )
    _add_common_args(verify_cmd, default_lambda='1.0')
    return parser


def _add_common_args(parser: ArgumentParser, default_lambda: Optional[str]):
    parser.add_argument('case', help='Case file (MATPOWER .m or JSON), or a bundled case name')
    parser.add_argument(
        '--lambda',
        dest='lambda_range',
        default=default_lambda,
        required=default_lambda is None,
        help='Loading level(s): a value, a comma-separated list, or start:stop:step',
    )
    parser.add_argument(
        '--targets',
        choices=SCALING_TARGETS,
        default=LOADS_ONLY,
        help='Quantities scaled by the loading level',
    )
    parser.add_argument(
        '--pv', type=int, action='append', default=[], help='Treat a bus as voltage-regulated'
    )
    parser.add_argument(
        '--pq', type=int, action='append', default=[], help='Treat a bus as unconstrained'
    )
    parser.add_argument(
        '--ilimit',
        action='append',
        default=[],
        metavar='BUS:I_MAX',
        help='Converter current limit in p.u., for example 33:1.2',
    )
    parser.add_argument(
        '--monitor',
        type=int,
        action='append',
        default=[],
        metavar='BUS',
        help='Take system C_W over this bus only (may be repeated); overrides the case file',
    )
    parser.add_argument('--tol', type=float, default=DEFAULT_TOLERANCE, help='Mismatch tolerance')
    parser.add_argument(
        '--max-iter', type=int, default=DEFAULT_MAX_ITERATIONS, help='Newton iteration cap'
    )
    parser.add_argument('--cw-variant', choices=CW_VARIANTS, default=CW_ROW)
    parser.add_argument('--format', choices=OUTPUT_FORMATS, default='table')
    parser.add_argument('-v', '--verbose', action='count', default=0, help='Increase log output')


# Commands
# --------------------


def cmd_analyze(args: Namespace) -> ReportDocument:
    """Solve at one loading level, enforce current limits, and evaluate all indices"""
    lambdas = _lambdas(args)
    if len(lambdas) != 1:
        raise InputError(f'analyze takes a single loading level, got {len(lambdas)}')
    lam = lambdas[0]
    case, profile, options = _prepare(args)

    scaled = scale_loading(case, lam, args.targets)
    point = newton_solve(scaled, profile, options)
    limited, point = enforce_current_limits(scaled, profile, point, options)
    sample = evaluate_point(
        scaled,
        limited,
        point,
        lam,
        variant=args.cw_variant,
        use_actual_voltage=args.scr_actual_voltage,
    )
    return ReportDocument(
        metadata=_metadata(args, case, lambdas),
        rows=sample.bus_rows(),
        transitions=mode_transitions(lam, profile, limited),
    )


def cmd_sweep(args: Namespace) -> ReportDocument:
    """Run a loading sweep, and locate any requested boundaries"""
    lambdas = _lambdas(args)
    case, profile, options = _prepare(args)
    result = run_sweep(
        case,
        profile,
        lambdas,
        targets=args.targets,
        options=options,
        variant=args.cw_variant,
        warm_start=not args.flat_start,
        predicates=args.find_boundary,
        tol=args.bisection_tol,
        workers=args.workers,
    )
    report = ReportDocument(
        metadata=_metadata(args, case, lambdas),
        rows=result.bus_rows(),
        boundaries=[result.boundaries[k] for k in args.find_boundary if k in result.boundaries],
        transitions=result.transitions,
        diagnostics=[
            f'lambda={s.lambda_value:g}: {s.diagnostics}' for s in result.samples if not s.converged
        ],
    )
    report.diagnostics.extend(
        f'No {k} boundary found within the sweep range'
        for k in args.find_boundary
        if k not in result.boundaries
    )
    margins = result.margins_to_singularity()
    if margins:
        report.metadata['margin_to_conv_percent'] = margins
    if args.csv:
        args.csv.write_text(render_csv(report.rows), encoding='utf-8')
        logger.info(f'Wrote {len(report.rows)} rows to {args.csv}')
    return report


def cmd_verify(args: Namespace) -> ReportDocument:
    """Check the Jacobian factorization at each loading level"""
    lambdas = _lambdas(args)
    case, profile, options = _prepare(args)
    reports: List[EquivalenceReport] = []
    for lam in lambdas:
        scaled = scale_loading(case, lam, args.targets)
        point = newton_solve(scaled, profile, options)
        limited, point = enforce_current_limits(scaled, profile, point, options)
        try:
            reports.append(verify(scaled, limited, point, lam=lam))
        except SingularColumnMap as e:
            logger.warning(f'lambda={lam:g}: {e}')
            reports.append(
                EquivalenceReport(
                    lambda_value=lam,
                    n_u=limited.n_u,
                    n_c=limited.n_c,
                    note=f'SingularColumnMap: {e}',
                )
            )
    return ReportDocument(
        metadata=_metadata(args, case, lambdas),
        equivalence=reports,
        diagnostics=[f'lambda={r.lambda_value:g}: {r.note}' for r in reports if not r.verdict],
    )


COMMANDS: Dict[str, Callable[[Namespace], ReportDocument]] = {
    'analyze': cmd_analyze,
    'sweep': cmd_sweep,
    'verify': cmd_verify,
}


def _lambdas(args: Namespace) -> List[float]:
    try:
        lambdas = parse_lambda_range(args.lambda_range)
    except ValueError as e:
        raise InputError(f'Invalid loading range {args.lambda_range!r}: {e}')
    if not lambdas:
        raise InputError(f'Loading range {args.lambda_range!r} is empty')
    if any(lam < 0 for lam in lambdas):
        raise InputError('Loading levels must be non-negative')
    return lambdas


def _prepare(args: Namespace):
    """Load the case and build the constraint profile and solver options from flags"""
    case = load_case_file(args.case)
    try:
        limits = dict(parse_bus_value(value) for value in args.ilimit)
    except ValueError as e:
        raise InputError(str(e))
    profile = ConstraintProfile.from_case(
        case, pv=args.pv, pq=args.pq, limits=limits, monitored=args.monitor or None
    )
    options = SolverOptions(tolerance=args.tol, max_iterations=args.max_iter)
    logger.debug(f'Profile: {profile}')
    return case, profile, options


def _metadata(args: Namespace, case: NetworkCase, lambdas: Sequence[float]) -> Dict[str, object]:
    from pywirtinger import __version__

    return {
        'command': args.command,
        'case': case.name,
        'version': __version__,
        'lambda': list(lambdas),
        'targets': args.targets,
        'tolerance': args.tol,
        'max_iterations': args.max_iter,
        'cw_variant': args.cw_variant,
        'pv': sorted(args.pv),
        'pq': sorted(args.pq),
        'ilimit': sorted(args.ilimit),
        'monitored': sorted(args.monitor or case.monitored),
    }


# Output
# --------------------


def write_report(report: ReportDocument, format: str):
    if format == 'json':
        sys.stdout.write(render_json(report))
    elif format == 'csv':
        sys.stdout.write(render_csv(report.rows))
        for message in report.diagnostics:
            print(message, file=sys.stderr)
    else:
        print_report(report)


def _report_not_converged(e: DidNotConverge):
    """Print the last iterate and mismatch trace of a failed solve to stderr"""
    print(f'Did not converge: {e}', file=sys.stderr)
    if e.trace:
        trace = ', '.join(f'{x:.3e}' for x in e.trace)
        print(f'Mismatch trace: {trace}', file=sys.stderr)
    point = e.state
    if point is not None:
        for bus_id in point.bus_order:
            v = point.voltage(bus_id)
            print(f'  bus {bus_id}: |V| = {abs(v):.6g}', file=sys.stderr)


def main(argv: Sequence[str] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    verbosity = {0: None, 1: 'INFO'}.get(args.verbose, 'DEBUG')
    enable_logging(verbosity)

    try:
        report = COMMANDS[args.command](args)
    except DidNotConverge as e:
        _report_not_converged(e)
        return EXIT_NOT_CONVERGED
    except ModeOscillation as e:
        print(f'Current limit switching did not settle: {e}', file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (ValueError, OSError) as e:
        print(f'Input error: {e}', file=sys.stderr)
        return EXIT_INPUT_ERROR
    except WirtingerError as e:
        print(f'{e.__class__.__name__}: {e}', file=sys.stderr)
        return EXIT_INPUT_ERROR

    write_report(report, args.format)
    if report.equivalence and not all(r.verdict for r in report.equivalence):
        return EXIT_VERIFY_FAILED
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
