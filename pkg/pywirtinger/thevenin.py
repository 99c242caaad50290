"""Slack-bus elimination, giving the reduced Thevenin form ``V = E + Z I`` of a network, and
conversion between voltage and current coordinates
"""
from logging import getLogger
from typing import Sequence, Union

import numpy as np

from pywirtinger.casemodel import build_ybus
from pywirtinger.constants import ComplexArray
from pywirtinger.exceptions import (
    CaseSemanticError,
    DimensionMismatch,
    SingularMatrix,
    SingularReducedAdmittance,
)
from pywirtinger.models import AdmittanceMatrix, ConstraintProfile, NetworkCase, TheveninModel
from pywirtinger.numerics import invert

logger = getLogger(__name__)


def reduce(
    y: AdmittanceMatrix,
    slack_id: int,
    v_slack: complex = 1.0,
    ordering: Union[ConstraintProfile, Sequence[int]] = None,
) -> TheveninModel:
    """Eliminate the slack bus: ``Z = Y_NN^-1`` and ``E = -Z Y_Ns v_slack``.

    Args:
        y: Bus admittance matrix
        slack_id: Slack bus number
        v_slack: Slack voltage phasor
        ordering: A constraint profile (giving unconstrained buses first, then constrained), or an
            explicit list of non-slack bus ids. Defaults to case order.

    Raises:
        :py:exc:`.SingularReducedAdmittance` if ``Y_NN`` is singular, e.g. due to an island
    """
    if isinstance(ordering, ConstraintProfile):
        bus_order, n_u = ordering.bus_order, ordering.n_u
    else:
        bus_order = list(ordering) if ordering is not None else y.bus_ids
        bus_order = [k for k in bus_order if k != slack_id]
        n_u = len(bus_order)

    expected = set(y.bus_ids) - {slack_id}
    if set(bus_order) != expected or len(bus_order) != len(expected):
        raise CaseSemanticError(
            f'Bus ordering {bus_order} does not cover the non-slack buses {sorted(expected)}'
        )

    y_nn = y.block(bus_order, bus_order)
    y_ns = y.block(bus_order, [slack_id])[:, 0]
    try:
        z = invert(y_nn)
    except SingularMatrix as e:
        raise SingularReducedAdmittance(
            f'Admittance matrix without slack bus {slack_id} is singular; '
            'check for buses islanded from the slack'
        ) from e

    e = -z @ y_ns * complex(v_slack)
    logger.debug(f'Reduced {len(bus_order)} buses; max |Z_ii| = {np.max(np.abs(np.diag(z))):.4g}')
    return TheveninModel(
        z=z,
        e=e,
        y_nn=y_nn,
        slack_id=slack_id,
        v_slack=v_slack,
        bus_order=bus_order,
        n_u=n_u,
    )


def thevenin_model(case: NetworkCase, profile: ConstraintProfile = None) -> TheveninModel:
    """Build the admittance matrix of a case and reduce it"""
    return reduce(build_ybus(case), case.slack_bus.id, case.slack_voltage, profile)


def voltages_from_currents(model: TheveninModel, i: ComplexArray) -> ComplexArray:
    """``V = E + Z I``"""
    i = _check_dimension(model, i)
    return model.e + model.z @ i


def currents_from_voltages(model: TheveninModel, v: ComplexArray) -> ComplexArray:
    """``I = Z^-1 (V - E)``, using ``Y_NN`` as the stored inverse of ``Z``"""
    v = _check_dimension(model, v)
    return model.y_nn @ (v - model.e)


def _check_dimension(model: TheveninModel, x) -> ComplexArray:
    x = np.asarray(x, dtype=complex)
    if x.shape != (model.n,):
        raise DimensionMismatch(f'Expected a vector of length {model.n}, got shape {x.shape}')
    return x
