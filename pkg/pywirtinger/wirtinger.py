"""Wirtinger power-flow sensitivities in current coordinates.

With ``V = E + Z I`` and ``S_i = V_i I_i*``, the complex powers are functions of ``I`` and ``I*``
treated as independent variables. At a constrained bus only the active power is specified, and an
admissible current perturbation must keep ``|V_i|`` (or ``|I_i|``) constant, which ties ``dI_i*``
to ``dI_i`` through a unit-modulus tangent factor ``xi_i``. Merging each constrained bus's ``I``
and ``I*`` columns by that factor, and dropping its redundant ``P*`` row, gives the reduced
Jacobian of order ``2 n_u + n_c``. Strict row diagonal dominance of the reduced Jacobian certifies
that it is nonsingular, and the per-bus ratio of pivot to off-pivot magnitude is the C_W index.
"""
from logging import getLogger
from typing import List, Set, Tuple

import numpy as np

from pywirtinger.constants import (
    CURRENT_CONSTRAINED,
    CW_ROW,
    CW_VARIANTS,
    MIN_CURRENT,
    MIN_IMPEDANCE,
    MIN_VOLTAGE,
    TANGENT_KAPPA,
    TANGENT_ZETA,
    VOLTAGE_CONSTRAINED,
    ComplexArray,
)
from pywirtinger.exceptions import DegenerateInput, DimensionMismatch
from pywirtinger.models import (
    ConstraintProfile,
    DominanceReport,
    OperatingPoint,
    ReducedJacobian,
    TangentFactor,
    TheveninModel,
)

logger = getLogger(__name__)


# Tangent factors
# --------------------


def kappa(v: complex, z_self: complex, bus: int = None) -> TangentFactor:
    """Tangent factor of a voltage-constrained bus: ``-(V* Z_ii) / (V Z_ii*)``

    Example:
        >>> kappa(1, 0.25j).value
        (1+0j)
    """
    v, z_self = complex(v), complex(z_self)
    if abs(v) < MIN_VOLTAGE:
        raise DegenerateInput('Tangent factor undefined at zero voltage', bus)
    if abs(z_self) < MIN_IMPEDANCE:
        raise DegenerateInput('Tangent factor undefined at zero self-impedance', bus)
    value = -(v.conjugate() * z_self) / (v * z_self.conjugate())
    return TangentFactor(value=value / abs(value), kind=TANGENT_KAPPA)


def zeta(i: complex, bus: int = None) -> TangentFactor:
    """Tangent factor of a current-constrained bus: ``-I* / I``

    Example:
        >>> zeta(1j).value
        (1+0j)
    """
    i = complex(i)
    if abs(i) < MIN_CURRENT:
        raise DegenerateInput('Tangent factor undefined at zero current', bus)
    value = -i.conjugate() / i
    return TangentFactor(value=value / abs(value), kind=TANGENT_ZETA)


def xi_profile(
    point: OperatingPoint, model: TheveninModel, profile: ConstraintProfile
) -> List[TangentFactor]:
    """Tangent factors of all non-slack buses, in model bus order: zero at unconstrained buses,
    kappa at voltage-constrained buses, and zeta at current-constrained buses
    """
    point = _aligned(point, model)
    factors = []
    for k, bus_id in enumerate(model.bus_order):
        kind = profile.mode(bus_id).kind
        if kind == VOLTAGE_CONSTRAINED:
            factors.append(kappa(point.v[k], model.z[k, k], bus=bus_id))
        elif kind == CURRENT_CONSTRAINED:
            factors.append(zeta(point.i[k], bus=bus_id))
        else:
            factors.append(TangentFactor())
    return factors


def alpha(v: complex, z_self: complex, i: complex) -> complex:
    """Self-sensitivity of active power to ``I*`` at a bus: ``(V + Z_ii* I) / 2``

    Example:
        >>> alpha(1, 0.1j, 1)
        (0.5-0.05j)
    """
    return 0.5 * (complex(v) + complex(z_self).conjugate() * complex(i))


def _aligned(point: OperatingPoint, model: TheveninModel) -> OperatingPoint:
    if point.bus_order == model.bus_order:
        return point
    if set(point.bus_order) != set(model.bus_order):
        raise DimensionMismatch('Operating point and model cover different buses')
    return point.reordered(model.bus_order)


# Full and reduced Jacobians
# --------------------


def power_sensitivities(v: ComplexArray, i: ComplexArray, z: ComplexArray):
    """Wirtinger derivatives of ``S`` and ``P`` at all buses with respect to ``I`` and ``I*``.

    Returns:
        ``(dS/dI, dS/dI*, dP/dI, dP/dI*)``, each ``n x n``
    """
    ds_di = np.conj(i)[:, None] * z
    ds_dic = np.diag(v)
    dp_di = 0.5 * (ds_di + np.diag(np.conj(v)))
    dp_dic = 0.5 * (np.diag(v) + i[:, None] * np.conj(z))
    return ds_di, ds_dic, dp_di, dp_dic


def _place_columns(d_i: ComplexArray, d_ic: ComplexArray, n_u: int) -> ComplexArray:
    """Arrange derivative blocks into the column order ``[I_U; I_U*; I_C; I_C*]``"""
    return np.hstack([d_i[:, :n_u], d_ic[:, :n_u], d_i[:, n_u:], d_ic[:, n_u:]])


def full_jacobian(
    point: OperatingPoint, model: TheveninModel, profile: ConstraintProfile = None
) -> ComplexArray:
    """Full Wirtinger Jacobian of order ``2n``, with rows ``[S_U; S_U*; P_C; P_C*]`` and columns
    ``[I_U; I_U*; I_C; I_C*]``
    """
    point = _aligned(point, model)
    n_u = profile.n_u if profile is not None else model.n_u
    v, i, z = point.v, point.i, model.z
    ds_di, ds_dic, dp_di, dp_dic = power_sensitivities(v, i, z)

    # Conjugate rows: dS*/dI = (dS/dI*)*, dS*/dI* = (dS/dI)*
    s_rows = _place_columns(ds_di, ds_dic, n_u)[:n_u]
    sc_rows = _place_columns(np.conj(ds_dic), np.conj(ds_di), n_u)[:n_u]
    p_rows = _place_columns(dp_di, dp_dic, n_u)[n_u:]
    return np.vstack([s_rows, sc_rows, p_rows, p_rows])


def merge_projection(xi: ComplexArray, n_u: int) -> ComplexArray:
    """Column map from reduced to full current variations: ``dI_C* = xi dI_C`` at constrained buses"""
    xi = np.asarray(xi, dtype=complex)
    n_c = len(xi)
    projection = np.zeros((2 * n_u + 2 * n_c, 2 * n_u + n_c), dtype=complex)
    projection[: 2 * n_u, : 2 * n_u] = np.eye(2 * n_u)
    projection[2 * n_u : 2 * n_u + n_c, 2 * n_u :] = np.eye(n_c)
    projection[2 * n_u + n_c :, 2 * n_u :] = np.diag(xi)
    return projection


def row_drop(n_u: int, n_c: int) -> np.ndarray:
    """Row selection that keeps ``[S_U; S_U*; P_C]`` and drops the ``P_C*`` rows"""
    return np.eye(2 * n_u + 2 * n_c)[: 2 * n_u + n_c]


def reduced_jacobian(
    point: OperatingPoint, model: TheveninModel, profile: ConstraintProfile
) -> ReducedJacobian:
    """Reduced Wirtinger Jacobian, of order ``2 n_u + n_c``

    Raises:
        :py:exc:`.DegenerateInput` if a tangent factor is undefined at a constrained bus
    """
    point = _aligned(point, model)
    n_u, n_c = profile.n_u, profile.n_c
    factors = xi_profile(point, model, profile)
    xi = np.array([complex(f) for f in factors[n_u:]], dtype=complex)

    j_full = full_jacobian(point, model, profile)
    _check_conjugate_rows(j_full, n_u, n_c)
    matrix = row_drop(n_u, n_c) @ j_full @ merge_projection(xi, n_u)

    z_self = np.diag(model.z)[n_u:]
    alphas = np.array(
        [alpha(v, z, i) for v, z, i in zip(point.v[n_u:], z_self, point.i[n_u:])], dtype=complex
    )
    return ReducedJacobian(
        matrix=matrix,
        n_u=n_u,
        n_c=n_c,
        bus_order=list(model.bus_order),
        alpha=alphas,
        xi=xi,
    )


def _check_conjugate_rows(j_full: ComplexArray, n_u: int, n_c: int):
    """The dropped P* rows must be the conjugate image of the kept P rows: swapping the I and I*
    column blocks and conjugating gives the same row
    """
    kept, dropped = j_full[2 * n_u : 2 * n_u + n_c], j_full[2 * n_u + n_c :]
    u, uc, c, cc = np.split(kept, [n_u, 2 * n_u, 2 * n_u + n_c], axis=1)
    swap = np.hstack([uc, u, cc, c])
    scale = max(1.0, float(np.max(np.abs(kept)))) if kept.size else 1.0
    assert np.allclose(np.conj(swap), dropped, atol=1e-9 * scale), 'P* rows are not conjugate'


# Dominance
# --------------------


def dominance_report(
    j: ReducedJacobian,
    point: OperatingPoint,
    model: TheveninModel,
    profile: ConstraintProfile = None,
    variant: str = CW_ROW,
) -> DominanceReport:
    """Row diagonal dominance margins of a reduced Jacobian, and the C_W index of each bus.

    Each row's pivot is ``V_i`` for an ``S_i`` row, ``V_i*`` for an ``S_i*`` row, and
    ``alpha_i* + xi_i alpha_i`` for a ``P_i`` row. C_W is the ratio of the pivot magnitude to:

    * ``'row'``: the row's actual off-pivot sum (minimum over the bus's rows), so that C_W > 1 at
      every bus exactly when the matrix is strictly dominant
    * ``'printed'``: ``|I_i| * sum_{j != i} |Z_ij|`` at every bus type. This variant drops the 1/2
      factor at constrained buses, so it can exceed 1 at every bus while the matrix is not dominant
      and is not a nonsingularity certificate. On the bundled three-bus case at lambda = 0.53, its
      C_W is 1.0246 at bus 2 while sigma_min of the reduced Jacobian is 0.0034.

    Passive buses (see :py:class:`.ConstraintProfile`) carry no current, so their rows hold only
    their pivot and the matrix is block triangular in (active, passive) order. Off-pivot sums then
    count only entries within a row's own group, and passive buses have C_W = +inf. A zero
    denominator also gives C_W = +inf.
    """
    if variant not in CW_VARIANTS:
        raise ValueError(f'Unknown C_W variant: {variant}. Expected one of {CW_VARIANTS}')
    order = j.order
    pivots = j.pivot_columns
    passive = set(profile.passive) if profile is not None else set()
    monitored = list(profile.monitored) if profile is not None else []
    row_buses = [j.row_bus(r) for r in range(order)]
    magnitudes = np.abs(j.matrix)
    if passive:
        active = np.array([k not in passive for k in row_buses])
        magnitudes = np.where(np.equal.outer(active, active), magnitudes, 0.0)
    diagonal = np.array([magnitudes[r, pivots[r]] for r in range(order)], dtype=float)
    offdiag = magnitudes.sum(axis=1) - diagonal if order else np.zeros(0)

    if variant == CW_ROW:
        c_w = {}
        for bus_id, d, o in zip(row_buses, diagonal, offdiag):
            c_w[bus_id] = min(_ratio(d, o), c_w.get(bus_id, float('inf')))
    else:
        c_w = _printed_c_w(j, diagonal, point, model, passive)
    c_w.update({bus_id: float('inf') for bus_id in passive})

    report = DominanceReport(
        diagonal=diagonal,
        offdiag=offdiag,
        row_buses=row_buses,
        c_w=c_w,
        variant=variant,
        monitored=monitored,
    )
    logger.debug(
        f'Dominance: min margin {report.min_margin:.4g}, system C_W {report.system_c_w:.4g} '
        f'at bus {report.critical_bus}'
    )
    return report


def _printed_c_w(
    j: ReducedJacobian,
    diagonal: np.ndarray,
    point: OperatingPoint,
    model: TheveninModel,
    passive: Set[int],
):
    point = _aligned(point, model)
    active = np.array([k not in passive for k in model.bus_order])
    z = np.abs(model.z) * active
    off_z = z.sum(axis=1) - np.diag(z)
    denominators = np.abs(point.i) * off_z
    c_w = {}
    for k, bus_id in enumerate(model.bus_order):
        row = k if k < j.n_u else j.n_u + k
        c_w[bus_id] = _ratio(diagonal[row], denominators[k])
    return c_w


def _ratio(numerator: float, denominator: float) -> float:
    return float(numerator / denominator) if denominator > 0 else float('inf')


def analyze_point(
    point: OperatingPoint,
    model: TheveninModel,
    profile: ConstraintProfile,
    variant: str = CW_ROW,
) -> Tuple[ReducedJacobian, DominanceReport]:
    """Build the reduced Jacobian at an operating point and evaluate its dominance"""
    j = reduced_jacobian(point, model, profile)
    return j, dominance_report(j, point, model, profile, variant)
