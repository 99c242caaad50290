"""Loading sweeps with converter mode tracking, and bisection of stability boundaries"""
from concurrent.futures import ThreadPoolExecutor
from logging import getLogger
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from attr import evolve

from pywirtinger.casemodel import build_ybus, scale_loading
from pywirtinger.constants import (
    BOUNDARY_PREDICATES,
    CONSTANT_IMPEDANCE,
    CONV_SINGULAR,
    CONV_SINGULAR_RATIO,
    CW_ROW,
    CW_UNITY,
    DEFAULT_BISECTION_TOLERANCE,
    DEFAULT_L_INDEX_THRESHOLD,
    DEFAULT_WORKERS,
    DOMINANCE_LOSS,
    IBR_ONLY,
    L_INDEX,
    L_INDEX_THRESHOLD,
    LOADS_ONLY,
    Bracket,
)
from pywirtinger.exceptions import InvalidBracket, WirtingerError
from pywirtinger.indices import evaluate_indices
from pywirtinger.models import (
    AdmittanceMatrix,
    Boundary,
    ConstraintProfile,
    ModeTransition,
    NetworkCase,
    OperatingPoint,
    SolverOptions,
    SweepResult,
    SweepSample,
    TheveninModel,
)
from pywirtinger.numerics import singular_values
from pywirtinger.powerflow import conventional_jacobian, enforce_current_limits, newton_solve
from pywirtinger.thevenin import reduce
from pywirtinger.wirtinger import analyze_point

logger = getLogger(__name__)


def conv_singularity(case, profile, point, model) -> Tuple[float, bool]:
    """Smallest singular value of the conventional Jacobian, and whether it counts as singular
    (``sigma_min < 1e-8 ||J||_2``)
    """
    sigma = singular_values(conventional_jacobian(case, profile, point, model))
    return float(sigma[-1]), bool(sigma[-1] < CONV_SINGULAR_RATIO * sigma[0])


def evaluate_point(
    case: NetworkCase,
    profile: ConstraintProfile,
    point: OperatingPoint,
    lam: float,
    ybus: AdmittanceMatrix = None,
    model: TheveninModel = None,
    variant: str = CW_ROW,
    use_actual_voltage: bool = False,
) -> SweepSample:
    """Evaluate C_W, dominance, comparison indices, and conventional Jacobian singularity at a
    converged operating point
    """
    ybus = ybus or build_ybus(case)
    model = model or reduce(ybus, case.slack_bus.id, case.slack_voltage, profile)
    _, dominance = analyze_point(point, model, profile, variant)
    sigma_min, singular = conv_singularity(case, profile, point, model)
    return SweepSample(
        lambda_value=lam,
        converged=True,
        point=point,
        dominance=dominance,
        indices=evaluate_indices(point, ybus, model, profile, use_actual_voltage),
        sigma_min_conv=sigma_min,
        conv_singular=singular,
        modes={k: profile.mode(k).label for k in profile.bus_order},
    )


class LoadingSweep(Iterable):
    """Evaluate a network over an ascending schedule of loading levels.

    In warm-start mode (the default), each level is solved starting from the previous converged
    point, and converter current-limit switches latch for the rest of the sweep. In flat-start mode,
    levels are independent and are solved in parallel.

    Args:
        case: Network case at unit loading
        profile: Initial bus operating modes
        schedule: Ascending loading levels
        targets: Quantities to scale (see :py:func:`.scale_loading`)
        options: Solver tolerance and iteration cap
        variant: C_W denominator variant
        warm_start: Solve each level from the previous solution
        workers: Thread pool size for flat-start sweeps
    """

    def __init__(
        self,
        case: NetworkCase,
        profile: ConstraintProfile,
        schedule: Sequence[float],
        targets: str = LOADS_ONLY,
        options: SolverOptions = None,
        variant: str = CW_ROW,
        warm_start: bool = True,
        workers: int = DEFAULT_WORKERS,
    ):
        schedule = [float(lam) for lam in schedule]
        if not schedule:
            raise ValueError('Loading schedule is empty')
        if any(b < a for a, b in zip(schedule, schedule[1:])):
            raise ValueError(f'Loading schedule must be ascending: {schedule}')

        self.case = case
        self.profile = profile
        self.schedule = schedule
        self.targets = targets
        self.options = evolve(options or SolverOptions(), start=None)
        self.variant = variant
        self.warm_start = warm_start
        self.workers = workers

        self.ybus = build_ybus(case)
        self.model = reduce(self.ybus, case.slack_bus.id, case.slack_voltage, profile)
        self.transitions: List[ModeTransition] = []
        logger.debug(f'Prepared sweep over {len(schedule)} levels: {self}')

    def __iter__(self) -> Iterator[SweepSample]:
        if self.warm_start:
            yield from self._iter_warm()
        else:
            yield from self._iter_flat()

    def _iter_warm(self) -> Iterator[SweepSample]:
        profile, previous = self.profile, None
        self.transitions = []
        for lam in self.schedule:
            try:
                sample, profile_out = self.solve_level(lam, profile, previous)
            except WirtingerError as e:
                if previous is None:
                    raise
                logger.warning(f'lambda={lam:g}: {e}')
                yield SweepSample(lambda_value=lam, converged=False, diagnostics=str(e))
                continue
            self.transitions.extend(mode_transitions(lam, profile, profile_out))
            profile, previous = profile_out, sample.point
            yield sample

    def _iter_flat(self) -> Iterator[SweepSample]:
        def _solve(lam: float):
            try:
                return self.solve_level(lam, self.profile, None)
            except WirtingerError as e:
                return e

        with ThreadPoolExecutor(max_workers=self.workers) as executor:
            results = list(executor.map(_solve, self.schedule))

        self.transitions = []
        latched: Dict[int, str] = {}
        for k, (lam, result) in enumerate(zip(self.schedule, results)):
            if isinstance(result, Exception):
                if k == 0:
                    raise result
                yield SweepSample(lambda_value=lam, converged=False, diagnostics=str(result))
                continue
            sample, profile_out = result
            for transition in mode_transitions(lam, self.profile, profile_out):
                if transition.bus not in latched:
                    latched[transition.bus] = transition.to_mode
                    self.transitions.append(transition)
            yield sample

    def network(self, scaled: NetworkCase) -> Tuple[AdmittanceMatrix, TheveninModel]:
        """Admittance matrix and reduced model at one loading level. These change with loading only
        when scaled loads are part of the admittance matrix.
        """
        if self.case.load_model != CONSTANT_IMPEDANCE or self.targets == IBR_ONLY:
            return self.ybus, self.model
        ybus = build_ybus(scaled)
        return ybus, reduce(ybus, scaled.slack_bus.id, scaled.slack_voltage, self.profile)

    def solve_level(
        self, lam: float, profile: ConstraintProfile, start: Optional[OperatingPoint]
    ) -> Tuple[SweepSample, ConstraintProfile]:
        """Solve and evaluate one loading level"""
        scaled = scale_loading(self.case, lam, self.targets)
        ybus, model = self.network(scaled)
        profile = profile.rescheduled(scaled)
        options = evolve(self.options, start=start)
        point = newton_solve(scaled, profile, options, model)
        profile, point = enforce_current_limits(scaled, profile, point, options)
        sample = evaluate_point(scaled, profile, point, lam, ybus, model, self.variant)
        logger.info(
            f'lambda={lam:g}: {point}; system C_W {sample.system_c_w:.4g}, '
            f'sigma_min(J_conv) {sample.sigma_min_conv:.3e}'
        )
        return sample, profile

    def all(
        self, predicates: Iterable[str] = (), tol: float = DEFAULT_BISECTION_TOLERANCE
    ) -> SweepResult:
        """Run the whole sweep, and locate boundaries for any of the given predicates whose state
        changes between two samples
        """
        samples = list(self)
        result = SweepResult(samples=samples, transitions=list(self.transitions))
        for predicate in predicates:
            bracket = bracket_from_samples(samples, predicate)
            if bracket is None:
                logger.info(f'No {predicate} boundary within the sweep range')
                continue
            start = next(s for s in samples if s.lambda_value == bracket[0])
            result.boundaries[predicate] = find_boundary(
                self.case,
                self.profile,
                predicate,
                bracket,
                tol=tol,
                targets=self.targets,
                options=self.options,
                variant=self.variant,
                start=start.point,
            )
        return result

    def __str__(self) -> str:
        return (
            f'{self.__class__.__name__}(case={self.case.name}, '
            f'lambda={self.schedule[0]:g}..{self.schedule[-1]:g}, targets={self.targets}, '
            f'{"warm" if self.warm_start else "flat"} start)'
        )


def run_sweep(
    case: NetworkCase,
    profile: ConstraintProfile,
    schedule: Sequence[float],
    targets: str = LOADS_ONLY,
    options: SolverOptions = None,
    variant: str = CW_ROW,
    warm_start: bool = True,
    predicates: Iterable[str] = (),
    tol: float = DEFAULT_BISECTION_TOLERANCE,
    workers: int = DEFAULT_WORKERS,
) -> SweepResult:
    """Run a loading sweep; see :py:class:`.LoadingSweep`

    Raises:
        :py:exc:`.DidNotConverge` or another solver error if the first level fails; later failures
        are recorded as unconverged samples
    """
    sweep = LoadingSweep(case, profile, schedule, targets, options, variant, warm_start, workers)
    return sweep.all(predicates, tol)


def mode_transitions(
    lam: float, before: ConstraintProfile, after: ConstraintProfile
) -> List[ModeTransition]:
    return [
        ModeTransition(
            lambda_value=lam,
            bus=k,
            from_mode=before.mode(k).label,
            to_mode=after.mode(k).label,
        )
        for k in before.bus_order
        if before.mode(k).kind != after.mode(k).kind
    ]


# Boundaries
# --------------------


def is_beyond(
    sample: Optional[SweepSample],
    predicate: str,
    l_threshold: float = DEFAULT_L_INDEX_THRESHOLD,
) -> bool:
    """Whether a sample lies past a boundary. An unconverged sample is past every boundary."""
    if predicate not in BOUNDARY_PREDICATES:
        raise ValueError(f'Unknown predicate: {predicate}. Expected one of {BOUNDARY_PREDICATES}')
    if sample is None or not sample.converged:
        return True
    if predicate == DOMINANCE_LOSS:
        return not sample.dominant
    if predicate == CW_UNITY:
        return sample.system_c_w <= 1.0
    if predicate == L_INDEX_THRESHOLD:
        max_l = sample.indices[L_INDEX].max_value
        return max_l is not None and max_l >= l_threshold
    return sample.conv_singular


def bracket_from_samples(samples: Sequence[SweepSample], predicate: str) -> Optional[Bracket]:
    """Find the first pair of samples where a predicate changes state. For the conventional
    Jacobian singularity, the first unconverged sample may serve as the upper end.
    """
    for lo, hi in zip(samples, samples[1:]):
        if not lo.converged:
            return None
        if not hi.converged and predicate != CONV_SINGULAR:
            return None
        if is_beyond(lo, predicate) != is_beyond(hi, predicate):
            return lo.lambda_value, hi.lambda_value
    return None


class _LevelCheck:
    """Solves and evaluates single loading levels for bisection, warm-started from the most recent
    point found on the near side of the boundary
    """

    def __init__(self, sweep: LoadingSweep, predicate: str, start: Optional[OperatingPoint]):
        self.sweep = sweep
        self.predicate = predicate
        self.start = start
        self.profile = sweep.profile
        self.count = 0

    def __call__(self, lam: float) -> Tuple[bool, Optional[SweepSample], ConstraintProfile]:
        self.count += 1
        try:
            sample, profile = self.sweep.solve_level(lam, self.profile, self.start)
        except WirtingerError as e:
            logger.debug(f'Bisection solve at lambda={lam:.6g} failed: {e}')
            return True, None, self.profile
        return is_beyond(sample, self.predicate), sample, profile

    def accept(self, sample: SweepSample, profile: ConstraintProfile):
        self.start, self.profile = sample.point, profile


def find_boundary(
    case: NetworkCase,
    profile: ConstraintProfile,
    predicate: str,
    bracket: Bracket,
    tol: float = DEFAULT_BISECTION_TOLERANCE,
    targets: str = LOADS_ONLY,
    options: SolverOptions = None,
    variant: str = CW_ROW,
    start: OperatingPoint = None,
) -> Boundary:
    """Locate the loading level where a predicate changes state, by bisection. Each step is a full
    solve (with current limit enforcement) and evaluation; a level that fails to solve counts as
    past the boundary.

    Args:
        case: Network case at unit loading
        profile: Bus operating modes
        predicate: One of ``'dominance'``, ``'cw'``, ``'conv'``, or ``'lindex'``
        bracket: ``(lambda_lo, lambda_hi)``
        tol: Stop when the bracket is narrower than this
        targets: Quantities to scale
        options: Solver tolerance and iteration cap
        variant: C_W denominator variant
        start: Warm start point for the lower end of the bracket

    Raises:
        :py:exc:`.InvalidBracket` if the predicate has the same state at both ends
    """
    if predicate not in BOUNDARY_PREDICATES:
        raise ValueError(f'Unknown predicate: {predicate}. Expected one of {BOUNDARY_PREDICATES}')
    lo, hi = sorted(float(x) for x in bracket)
    sweep = LoadingSweep(case, profile, [lo, hi], targets, options, variant)
    check = _LevelCheck(sweep, predicate, start)

    lo_beyond, lo_sample, lo_profile = check(lo)
    if lo_sample is not None:
        check.accept(lo_sample, lo_profile)
    hi_beyond, _, _ = check(hi)
    if lo_beyond == hi_beyond:
        raise InvalidBracket(
            f'Predicate {predicate} is {"beyond" if lo_beyond else "within"} the boundary at both '
            f'lambda={lo:g} and lambda={hi:g}'
        )

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        beyond, sample, mid_profile = check(mid)
        if beyond == lo_beyond:
            lo = mid
            if sample is not None:
                check.accept(sample, mid_profile)
        else:
            hi = mid
        logger.debug(f'{predicate}: bracket [{lo:.6g}, {hi:.6g}]')

    boundary = Boundary(
        predicate=predicate,
        lambda_star=0.5 * (lo + hi),
        tolerance=hi - lo,
        bracket=(lo, hi),
        solves=check.count,
    )
    logger.info(f'Located boundary {boundary}')
    return boundary
