"""Newton-Raphson AC power flow in polar coordinates over unconstrained, voltage-constrained, and
current-constrained buses, with converter current limit enforcement.

The unknowns are ordered ``[theta_U; theta_C; U_U; U_CI]``: angles at all non-slack buses, then
voltage magnitudes at unconstrained and current-limited buses. Voltage-constrained magnitudes are
held at their setpoints. Mismatch rows are ordered ``[P_U; P_C; Q_U; |I|_CI]``, and are computed
minus specified, so the Jacobian is the derivative of the computed quantities.

Currents are always the network currents ``I = Y_NN (V - E)``, which equal ``(S / V)*`` at every
bus once the mismatch vanishes.
"""
from logging import getLogger
from typing import List, Optional, Tuple, Union

import numpy as np
from attr import evolve

from pywirtinger.constants import (
    CURRENT_LIMIT_HYSTERESIS,
    MAX_LIMIT_ITERATIONS,
    MAX_STEP_HALVINGS,
    ComplexArray,
    RealArray,
)
from pywirtinger.exceptions import (
    DidNotConverge,
    DimensionMismatch,
    ModeOscillation,
    SingularJacobianAtIterate,
    SingularMatrix,
)
from pywirtinger.models import (
    BusMode,
    ConstraintProfile,
    NetworkCase,
    OperatingPoint,
    SolverOptions,
    TheveninModel,
)
from pywirtinger.numerics import lu_solve
from pywirtinger.thevenin import currents_from_voltages, thevenin_model

logger = getLogger(__name__)

State = Union[ComplexArray, OperatingPoint]


class PowerFlowLayout:
    """Positions of each bus type within the bus order, state vector, and mismatch vector"""

    def __init__(self, case: NetworkCase, profile: ConstraintProfile):
        self.bus_order = profile.bus_order
        self.n = len(self.bus_order)
        self.n_u = profile.n_u
        index = {bus_id: k for k, bus_id in enumerate(self.bus_order)}
        self.ci_idx = [index[k] for k in profile.ci_buses]
        self.cv_idx = [index[k] for k in profile.cv_buses]
        self.mag_idx = list(range(self.n_u)) + self.ci_idx

        modes = [profile.mode(k) for k in self.bus_order]
        scheduled = np.array([case.scheduled_injection(k) for k in self.bus_order], dtype=complex)
        self.p_spec = np.array(
            [
                mode.p_set if mode.p_set is not None else s.real
                for mode, s in zip(modes, scheduled)
            ]
        )
        self.q_spec = scheduled.imag[: self.n_u]
        self.v_set = np.array([modes[k].v_set for k in self.cv_idx], dtype=float)
        self.i_max = np.array([modes[k].i_max for k in self.ci_idx], dtype=float)

    @property
    def n_equations(self) -> int:
        return self.n + self.n_u + len(self.ci_idx)

    def voltages(self, x: RealArray, template: ComplexArray) -> ComplexArray:
        """Voltage phasors from a state vector; held magnitudes are taken from ``template``"""
        magnitudes = np.abs(template).astype(float)
        magnitudes[self.mag_idx] = x[self.n :]
        return magnitudes * np.exp(1j * x[: self.n])

    def state(self, v: ComplexArray) -> RealArray:
        return np.concatenate([np.angle(v), np.abs(v)[self.mag_idx]])

    def flat_start(self, v_slack: complex) -> ComplexArray:
        magnitudes = np.ones(self.n)
        magnitudes[self.cv_idx] = self.v_set
        return magnitudes * np.exp(1j * np.angle(v_slack))


def _model_for(case: NetworkCase, profile: ConstraintProfile, model: Optional[TheveninModel]):
    if model is not None and model.bus_order == profile.bus_order:
        return model
    return thevenin_model(case, profile)


def _as_voltages(state: State, bus_order: List[int]) -> ComplexArray:
    if isinstance(state, OperatingPoint):
        state = state.reordered(bus_order).v
    v = np.asarray(state, dtype=complex)
    if v.shape != (len(bus_order),):
        raise DimensionMismatch(f'Expected {len(bus_order)} voltages, got shape {v.shape}')
    return v


# Mismatch and Jacobian
# --------------------


def _mismatch(layout: PowerFlowLayout, model: TheveninModel, v: ComplexArray) -> RealArray:
    i = currents_from_voltages(model, v)
    s = v * np.conj(i)
    return np.concatenate(
        [
            s.real - layout.p_spec,
            s.imag[: layout.n_u] - layout.q_spec,
            np.abs(i[layout.ci_idx]) - layout.i_max,
        ]
    )


def mismatch(
    case: NetworkCase,
    profile: ConstraintProfile,
    state: State,
    model: TheveninModel = None,
) -> RealArray:
    """Power flow residuals, computed minus specified: ``[dP (all); dQ_U; |I|_CI - i_max;
    |V|_CV - v_set]``. The first ``n + n_u + n_CI`` entries are the Newton equations; the trailing
    voltage rows are zero for any state produced by the solver.

    Args:
        case: Network case
        profile: Bus operating modes
        state: Voltage phasors in profile bus order, or an operating point
        model: Reduced network model, if already built for this profile
    """
    layout = PowerFlowLayout(case, profile)
    model = _model_for(case, profile, model)
    v = _as_voltages(state, layout.bus_order)
    return np.concatenate(
        [_mismatch(layout, model, v), np.abs(v[layout.cv_idx]) - layout.v_set]
    )


def _jacobian(layout: PowerFlowLayout, model: TheveninModel, v: ComplexArray) -> RealArray:
    y = model.y_nn
    i = currents_from_voltages(model, v)
    unit = v / np.abs(v)
    ds_dtheta = 1j * np.diag(v) @ np.conj(np.diag(i) - y @ np.diag(v))
    ds_du = np.diag(v) @ np.conj(y @ np.diag(unit)) + np.diag(np.conj(i) * unit)

    rows = [
        np.hstack([ds_dtheta.real, ds_du.real[:, layout.mag_idx]]),
        np.hstack([ds_dtheta.imag[: layout.n_u], ds_du.imag[: layout.n_u, layout.mag_idx]]),
    ]
    if layout.ci_idx:
        i_ci = i[layout.ci_idx]
        di_dtheta = y[layout.ci_idx] * (1j * v)
        di_du = y[layout.ci_idx] * unit
        weight = (np.conj(i_ci) / np.abs(i_ci))[:, None]
        rows.append(
            np.hstack(
                [(weight * di_dtheta).real, (weight * di_du).real[:, layout.mag_idx]]
            )
        )
    return np.vstack(rows)


def conventional_jacobian(
    case: NetworkCase,
    profile: ConstraintProfile,
    state: State,
    model: TheveninModel = None,
) -> RealArray:
    """Analytic Jacobian of the Newton mismatch rows ``[P_U; P_C; Q_U; |I|_CI]`` with respect to
    ``[theta_U; theta_C; U_U; U_CI]``
    """
    layout = PowerFlowLayout(case, profile)
    model = _model_for(case, profile, model)
    return _jacobian(layout, model, _as_voltages(state, layout.bus_order))


# Newton-Raphson
# --------------------


def flat_start(case: NetworkCase, profile: ConstraintProfile) -> ComplexArray:
    """Initial voltages: 1 p.u. at the slack angle, except voltage-constrained buses at ``v_set``"""
    return PowerFlowLayout(case, profile).flat_start(case.slack_voltage)


def _initial_voltages(case, profile, layout: PowerFlowLayout, options: SolverOptions):
    if not options.is_warm:
        return layout.flat_start(case.slack_voltage)
    start = options.start
    if set(start.bus_order) != set(layout.bus_order):
        raise DimensionMismatch('Warm start point does not cover the same buses as the profile')
    v = start.reordered(layout.bus_order).v.copy()
    v[layout.cv_idx] = layout.v_set * np.exp(1j * np.angle(v[layout.cv_idx]))
    return v


def _operating_point(
    model: TheveninModel,
    v: ComplexArray,
    converged: bool,
    iterations: int,
    trace: List[float],
) -> OperatingPoint:
    i = currents_from_voltages(model, v)
    return OperatingPoint(
        v=v,
        i=i,
        s=v * np.conj(i),
        bus_order=list(model.bus_order),
        slack_id=model.slack_id,
        v_slack=model.v_slack,
        converged=converged,
        iterations=iterations,
        max_mismatch=trace[-1] if trace else float('inf'),
        trace=list(trace),
    )


def newton_solve(
    case: NetworkCase,
    profile: ConstraintProfile,
    options: SolverOptions = None,
    model: TheveninModel = None,
) -> OperatingPoint:
    """Solve the power flow by damped Newton-Raphson. Each full step is halved (up to 4 times) while
    it increases the max mismatch.

    Args:
        case: Network case
        profile: Bus operating modes
        options: Tolerance, iteration cap, and optional warm start point
        model: Reduced network model, if already built for this profile

    Raises:
        :py:exc:`.DidNotConverge` at the iteration cap, with the last iterate and mismatch trace
        :py:exc:`.SingularJacobianAtIterate` if the Jacobian is singular at an iterate
    """
    options = options or SolverOptions()
    layout = PowerFlowLayout(case, profile)
    model = _model_for(case, profile, model)
    v = _initial_voltages(case, profile, layout, options)

    f = _mismatch(layout, model, v)
    trace = [_norm(f)]
    iterations = 0
    while trace[-1] > options.tolerance:
        if iterations >= options.max_iterations:
            raise DidNotConverge(
                f'No convergence after {iterations} iterations '
                f'(max mismatch {trace[-1]:.3e})',
                state=_operating_point(model, v, False, iterations, trace),
                trace=trace,
            )
        try:
            dx = -lu_solve(_jacobian(layout, model, v), f).real
        except SingularMatrix as e:
            raise SingularJacobianAtIterate(
                f'Singular Jacobian at iteration {iterations}',
                state=_operating_point(model, v, False, iterations, trace),
                trace=trace,
            ) from e

        v, f = _damped_step(layout, model, v, dx, trace[-1])
        iterations += 1
        trace.append(_norm(f))
        logger.debug(f'Iteration {iterations}: max mismatch {trace[-1]:.3e}')
        if not np.isfinite(trace[-1]):
            raise DidNotConverge(
                f'Diverged at iteration {iterations}',
                state=_operating_point(model, v, False, iterations, trace),
                trace=trace,
            )

    return _operating_point(model, v, True, iterations, trace)


def _damped_step(
    layout: PowerFlowLayout, model: TheveninModel, v: ComplexArray, dx: RealArray, norm: float
) -> Tuple[ComplexArray, RealArray]:
    x = layout.state(v)
    step = 1.0
    for _ in range(MAX_STEP_HALVINGS + 1):
        v_new = layout.voltages(x + step * dx, v)
        f_new = _mismatch(layout, model, v_new)
        if _norm(f_new) <= norm:
            break
        step /= 2
    return v_new, f_new


def _norm(f: RealArray) -> float:
    return float(np.max(np.abs(f))) if len(f) else 0.0


# Current limits
# --------------------


def limit_violations(profile: ConstraintProfile, point: OperatingPoint) -> List[int]:
    """Voltage-constrained buses whose current exceeds their limit"""
    return [
        bus_id
        for bus_id in profile.cv_buses
        if profile.mode(bus_id).i_max is not None
        and abs(point.current(bus_id)) > profile.mode(bus_id).i_max * (1 + CURRENT_LIMIT_HYSTERESIS)
    ]


def enforce_current_limits(
    case: NetworkCase,
    profile: ConstraintProfile,
    point: OperatingPoint,
    options: SolverOptions = None,
) -> Tuple[ConstraintProfile, OperatingPoint]:
    """Switch voltage-regulating converters that exceed their current limit to current-limited
    operation, and re-solve, until no limits are violated. Switches are latched within one call.

    Returns:
        Updated profile and operating point; both are returned unchanged if no limit is violated

    Raises:
        :py:exc:`.ModeOscillation` if violations persist after 10 rounds of switching
    """
    options = options or SolverOptions()
    for _ in range(MAX_LIMIT_ITERATIONS):
        violations = limit_violations(profile, point)
        if not violations:
            return profile, point
        for bus_id in violations:
            mode = profile.mode(bus_id)
            logger.info(
                f'Bus {bus_id}: |I| = {abs(point.current(bus_id)):.4f} exceeds '
                f'i_max = {mode.i_max:.4f}; switching to current-limited mode'
            )
            p_set = case.scheduled_injection(bus_id).real
            profile = profile.with_mode(bus_id, BusMode.current(mode.i_max, p_set))
        point = newton_solve(case, profile, evolve(options, start=point))

    if limit_violations(profile, point):
        raise ModeOscillation(
            f'Current limits still violated after {MAX_LIMIT_ITERATIONS} rounds of mode switching'
        )
    return profile, point


def solve_with_limits(
    case: NetworkCase,
    profile: ConstraintProfile,
    options: SolverOptions = None,
) -> Tuple[ConstraintProfile, OperatingPoint]:
    """Solve, then enforce current limits"""
    point = newton_solve(case, profile, options)
    return enforce_current_limits(case, profile, point, options)
