"""Classical voltage stability indices, for comparison with C_W: the L-index, the short-circuit
ratio (SCR), and an impedance-eigenvalue grid strength index (K_R).

K_R here is ``|V_i|^2 / (lambda_max(|Z|) |P_i|)``, where ``lambda_max(|Z|)`` is the spectral radius
of the elementwise magnitude of the reduced impedance matrix. It follows the usual description
of K_R as derived from the largest eigenvalue of the network impedance matrix, but is not a
reproduction of any particular published formula.
"""
from logging import getLogger
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np

from pywirtinger.constants import KR_INDEX, L_INDEX, MIN_ACTIVE_POWER, SCR_INDEX
from pywirtinger.exceptions import SingularLoadBlock, SingularMatrix
from pywirtinger.models import (
    AdmittanceMatrix,
    ConstraintProfile,
    IndexVector,
    OperatingPoint,
    TheveninModel,
)
from pywirtinger.numerics import lu_solve, max_eigenvalue_magnitude

logger = getLogger(__name__)

PowerByBus = Mapping[int, float]


def bus_sets(profile: ConstraintProfile) -> Tuple[Sequence[int], Sequence[int]]:
    """Generator set (slack and voltage-regulating buses) and load set (unconstrained and
    current-limited buses) for the L-index
    """
    return [profile.slack_id] + profile.cv_buses, profile.u_buses + profile.ci_buses


def l_index(
    point: OperatingPoint,
    ybus: AdmittanceMatrix,
    generator_set: Sequence[int],
    load_set: Sequence[int],
) -> IndexVector:
    """L-index at each load bus: ``L_j = |1 - sum_i F_ji V_i / V_j|``, with
    ``F = -Y_LL^-1 Y_LG``. Buses outside the load set get no value.

    Raises:
        :py:exc:`.SingularLoadBlock` if ``Y_LL`` is singular
    """
    values: Dict[int, float] = {k: None for k in point.bus_order}
    if not load_set:
        return IndexVector(kind=L_INDEX, values=values)

    y_ll = ybus.block(load_set, load_set)
    y_lg = ybus.block(load_set, generator_set)
    try:
        f = -lu_solve(y_ll, y_lg)
    except SingularMatrix as e:
        raise SingularLoadBlock('Load bus block of the admittance matrix is singular') from e

    voltages = point.voltages_by_bus()
    v_g = np.array([voltages[k] for k in generator_set], dtype=complex)
    v_l = np.array([voltages[k] for k in load_set], dtype=complex)
    l_values = np.abs(1 - (f @ v_g) / v_l)
    values.update({k: float(x) for k, x in zip(load_set, l_values)})
    return IndexVector(kind=L_INDEX, values=values)


def _local_power(point: OperatingPoint, p_local: PowerByBus = None) -> Dict[int, float]:
    if p_local is None:
        return {k: float(s.real) for k, s in zip(point.bus_order, point.s)}
    return {k: float(p_local.get(k, 0.0)) for k in point.bus_order}


def scr(
    point: OperatingPoint,
    model: TheveninModel,
    p_local: PowerByBus = None,
    use_actual_voltage: bool = False,
) -> IndexVector:
    """Short-circuit ratio ``V^2 / (|Z_ii| |P_i|)``, using a 1.0 p.u. nominal voltage by default.

    Args:
        point: Operating point
        model: Reduced network model
        p_local: Active power by bus; defaults to the net injection at each bus
        use_actual_voltage: Use ``|V_i|`` instead of the nominal voltage
    """
    power = _local_power(point, p_local)
    z_self = dict(zip(model.bus_order, np.abs(np.diag(model.z))))
    values = {}
    for bus_id in point.bus_order:
        p = abs(power[bus_id])
        numerator = abs(point.voltage(bus_id)) ** 2 if use_actual_voltage else 1.0
        values[bus_id] = numerator / (z_self[bus_id] * p) if p >= MIN_ACTIVE_POWER else None
    return IndexVector(kind=SCR_INDEX, values=values)


def kr_index(point: OperatingPoint, model: TheveninModel, p_local: PowerByBus = None) -> IndexVector:
    """Impedance-eigenvalue strength index ``|V_i|^2 / (lambda_max(|Z|) |P_i|)``"""
    power = _local_power(point, p_local)
    z_max = max_eigenvalue_magnitude(np.abs(model.z))
    values = {}
    for bus_id in point.bus_order:
        p = abs(power[bus_id])
        numerator = abs(point.voltage(bus_id)) ** 2
        values[bus_id] = numerator / (z_max * p) if p >= MIN_ACTIVE_POWER and z_max > 0 else None
    return IndexVector(kind=KR_INDEX, values=values)


def evaluate_indices(
    point: OperatingPoint,
    ybus: AdmittanceMatrix,
    model: TheveninModel,
    profile: ConstraintProfile,
    use_actual_voltage: bool = False,
) -> Dict[str, IndexVector]:
    """All comparison indices at an operating point. Passive buses have no SCR or K_R."""
    generator_set, load_set = bus_sets(profile)
    p_local = {
        k: 0.0 if profile.is_passive(k) else float(s.real) for k, s in zip(point.bus_order, point.s)
    }
    return {
        L_INDEX: l_index(point, ybus, generator_set, load_set),
        SCR_INDEX: scr(point, model, p_local, use_actual_voltage=use_actual_voltage),
        KR_INDEX: kr_index(point, model, p_local),
    }
