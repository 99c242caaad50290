"""Numerical check of the factorization ``J_conv = L J_red R``, which relates the conventional
polar Jacobian to the reduced Wirtinger Jacobian.

``L`` maps complex power variations ``[dS_U; dS_U*; dP_C]`` to real ones ``[dP_U; dQ_U; dP_C]``,
and ``R`` maps polar state variations ``[dU_U; dtheta_C; dtheta_U]`` to current variations
``[dI_U; dI_U*; dI_C]`` through ``dI = Y_NN dV``. Since ``L`` is always nonsingular and ``R`` is
nonsingular away from pathological points, both Jacobians then become singular together.

The chain rule through the full Wirtinger Jacobian holds at every point. The reduced form also
requires the constrained-bus columns to be merged with the exact tangent relation of each
perturbation, which is always the case for current-limited buses and for systems without
constrained buses, but is a local approximation at voltage-regulated buses in meshed systems.
Both residuals are reported.

Current-limited buses are handled by eliminating their voltage magnitudes: from the Jacobian,
by a Schur complement on the ``|I|`` rows, and from the column map, with an extra column per bus
that keeps ``|I|`` constant.
"""
from logging import getLogger
from typing import Tuple

import numpy as np

from pywirtinger.constants import MIN_COLUMN_MAP_SINGULAR_VALUE, MIN_VOLTAGE, ComplexArray, RealArray
from pywirtinger.exceptions import SingularColumnMap, SingularMatrix
from pywirtinger.models import (
    ConstraintProfile,
    EquivalenceReport,
    NetworkCase,
    OperatingPoint,
    TheveninModel,
)
from pywirtinger.numerics import lu_solve, min_singular_value, relative_residual
from pywirtinger.powerflow import conventional_jacobian
from pywirtinger.thevenin import thevenin_model
from pywirtinger.wirtinger import full_jacobian, reduced_jacobian, row_drop

logger = getLogger(__name__)


def row_map(n_u: int, n_c: int) -> ComplexArray:
    """Row map ``L``: ``K = [[1/2, 1/2], [1/(2j), -1/(2j)]]`` on the unconstrained blocks, and the
    identity on the constrained block

    Example:
        >>> row_map(0, 2).real
        array([[1., 0.],
               [0., 1.]])
    """
    if n_u < 0 or n_c < 0 or n_u + n_c == 0:
        raise ValueError(f'Invalid block sizes: n_u={n_u}, n_c={n_c}')
    eye_u = np.eye(n_u)
    l_map = np.zeros((2 * n_u + n_c, 2 * n_u + n_c), dtype=complex)
    l_map[:n_u, :n_u] = 0.5 * eye_u
    l_map[:n_u, n_u : 2 * n_u] = 0.5 * eye_u
    l_map[n_u : 2 * n_u, :n_u] = eye_u / 2j
    l_map[n_u : 2 * n_u, n_u : 2 * n_u] = -eye_u / 2j
    l_map[2 * n_u :, 2 * n_u :] = np.eye(n_c)
    return l_map


def _aligned(point: OperatingPoint, model: TheveninModel) -> OperatingPoint:
    return point if point.bus_order == model.bus_order else point.reordered(model.bus_order)


def voltage_map(
    point: OperatingPoint, model: TheveninModel, profile: ConstraintProfile
) -> Tuple[ComplexArray, bool]:
    """Map ``M`` from ``[dU_U; dtheta_C; dtheta_U]`` to ``dV`` at all non-slack buses.

    Returns:
        ``M``, and whether it was extended to eliminate current-limited bus magnitudes
    """
    point = _aligned(point, model)
    v = point.v
    if np.any(np.abs(v) < MIN_VOLTAGE):
        raise SingularColumnMap('Column map is pathological at a near-zero bus voltage')

    n, n_u = model.n, profile.n_u
    n_c = n - n_u
    unit = v / np.abs(v)
    m_map = np.zeros((n, 2 * n_u + n_c), dtype=complex)
    m_map[np.arange(n_u), np.arange(n_u)] = unit[:n_u]
    m_map[np.arange(n_u, n), n_u + np.arange(n_c)] = 1j * v[n_u:]
    m_map[np.arange(n_u), n_u + n_c + np.arange(n_u)] = 1j * v[:n_u]

    index = model.index
    ci_idx = [index[k] for k in profile.ci_buses]
    if not ci_idx:
        return m_map, False

    # dU_CI is fixed by Re(I_j* dI_j) = 0 at each current-limited bus
    n_map = np.zeros((n, len(ci_idx)), dtype=complex)
    n_map[ci_idx, np.arange(len(ci_idx))] = unit[ci_idx]
    weight = np.conj(point.i[ci_idx])[:, None]
    a = (weight * (model.y_nn @ n_map)[ci_idx]).real
    b = (weight * (model.y_nn @ m_map)[ci_idx]).real
    try:
        m_map = m_map - n_map @ lu_solve(a, b).real
    except SingularMatrix as e:
        raise SingularColumnMap('Current-limited bus magnitudes cannot be eliminated') from e
    return m_map, True


def column_map(
    point: OperatingPoint, model: TheveninModel, profile: ConstraintProfile, full: bool = False
) -> ComplexArray:
    """Column map ``R`` from ``[dU_U; dtheta_C; dtheta_U]`` to ``[dI_U; dI_U*; dI_C]``, or with
    ``full=True``, to ``[dI_U; dI_U*; dI_C; dI_C*]``. Conjugate rows are formed by conjugation.

    Raises:
        :py:exc:`.SingularColumnMap` at a near-zero voltage, or if ``sigma_min(R) < 1e-10``
    """
    m_map, _ = voltage_map(point, model, profile)
    di = model.y_nn @ m_map
    n_u = profile.n_u
    blocks = [di[:n_u], np.conj(di[:n_u]), di[n_u:]]
    if full:
        blocks.append(np.conj(di[n_u:]))
    r_map = np.vstack(blocks)

    if not full and r_map.size and min_singular_value(r_map) < MIN_COLUMN_MAP_SINGULAR_VALUE:
        raise SingularColumnMap(
            f'Column map is singular (sigma_min = {min_singular_value(r_map):.3e})'
        )
    return r_map


def conventional_square_jacobian(
    case: NetworkCase,
    profile: ConstraintProfile,
    point: OperatingPoint,
    model: TheveninModel = None,
) -> RealArray:
    """Conventional Jacobian with rows ``[P_U; Q_U; P_C]`` and columns ``[U_U; theta_C; theta_U]``.
    Current-limited bus magnitudes are eliminated by a Schur complement on their ``|I|`` rows.
    """
    model = model or thevenin_model(case, profile)
    jac = conventional_jacobian(case, profile, point, model)
    n, n_u = model.n, profile.n_u
    m = n + n_u
    if jac.shape[0] > m:
        j_aa, j_ab = jac[:m, :m], jac[:m, m:]
        j_ba, j_bb = jac[m:, :m], jac[m:, m:]
        try:
            jac = j_aa - j_ab @ lu_solve(j_bb, j_ba).real
        except SingularMatrix as e:
            raise SingularColumnMap('Current-limited bus magnitudes cannot be eliminated') from e

    rows = list(range(n_u)) + list(range(n, m)) + list(range(n_u, n))
    cols = list(range(n, m)) + list(range(n_u, n)) + list(range(n_u))
    return jac[np.ix_(rows, cols)]


def verify(
    case: NetworkCase,
    profile: ConstraintProfile,
    point: OperatingPoint,
    model: TheveninModel = None,
    lam: float = None,
) -> EquivalenceReport:
    """Build ``J_conv``, ``J_red``, ``L``, and ``R`` independently, and compare ``J_conv`` with
    ``L J_red R`` and with the chain through the full Wirtinger Jacobian

    Raises:
        :py:exc:`.SingularColumnMap` at a pathological point
    """
    model = model or thevenin_model(case, profile)
    point = _aligned(point, model)
    n_u, n_c = profile.n_u, profile.n_c

    j_conv = conventional_square_jacobian(case, profile, point, model)
    l_map = row_map(n_u, n_c)
    r_map = column_map(point, model, profile)
    r_full = column_map(point, model, profile, full=True)
    j_red = reduced_jacobian(point, model, profile).matrix
    j_chain = row_drop(n_u, n_c) @ full_jacobian(point, model, profile)

    report = EquivalenceReport(
        lambda_value=lam,
        residual=relative_residual(j_conv, l_map @ j_red @ r_map),
        chain_residual=relative_residual(j_conv, l_map @ j_chain @ r_full),
        det_l_magnitude=float(abs(np.linalg.det(l_map))),
        r_min_singular=min_singular_value(r_map),
        current_limit_extension=bool(profile.ci_buses),
        n_u=n_u,
        n_c=n_c,
        note=(
            'R extended with |I|-preserving columns at current-limited buses'
            if profile.ci_buses
            else ''
        ),
    )
    logger.debug(
        f'Equivalence: residual {report.residual:.3e}, chain residual {report.chain_residual:.3e}'
    )
    return report
