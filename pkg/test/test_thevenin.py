import numpy as np
import pytest

from pywirtinger.casemodel import build_ybus, parse_case
from pywirtinger.exceptions import CaseSemanticError, DimensionMismatch, SingularReducedAdmittance
from pywirtinger.models import BusMode, ConstraintProfile
from pywirtinger.thevenin import (
    currents_from_voltages,
    reduce,
    thevenin_model,
    voltages_from_currents,
)
from test.conftest import two_bus_case


def test_reduce__two_bus():
    model = thevenin_model(two_bus_case(x=0.25))
    assert model.bus_order == [2]
    assert model.z[0, 0] == pytest.approx(0.25j)
    # With no shunts, the open-circuit voltage equals the slack voltage
    assert model.e[0] == pytest.approx(1.0)


def test_reduce__slack_angle():
    case = two_bus_case()
    ybus = build_ybus(case)
    v_slack = 1.02 * np.exp(0.3j)
    model = reduce(ybus, 1, v_slack)
    assert model.e[0] == pytest.approx(v_slack)
    assert model.v_slack == pytest.approx(v_slack)


def test_reduce__profile_ordering(three_bus):
    profile = ConstraintProfile.from_case(three_bus)
    model = thevenin_model(three_bus, profile)
    assert model.bus_order == [2, 3]
    assert model.n_u == 1 and model.n_c == 1
    assert np.allclose(model.z @ model.y_nn, np.eye(2))

    # Radial network: every bus sees the full impedance to the slack through bus 2
    z12 = 0.08 + 0.4j
    assert model.z[0, 0] == pytest.approx(z12)
    assert model.z[0, 1] == pytest.approx(z12)
    assert model.z[1, 1] == pytest.approx(z12 + 0.1 + 0.5j)
    assert model.z_self == pytest.approx(np.diag(model.z))


def test_reduce__explicit_ordering(three_bus):
    ybus = build_ybus(three_bus)
    model = reduce(ybus, 1, 1.0, [3, 1, 2])
    assert model.bus_order == [3, 2]
    assert model.n_u == 2
    assert model.z[0, 0] == pytest.approx(0.18 + 0.9j)


def test_reduce__permutation_invariance(three_bus):
    ybus = build_ybus(three_bus)
    a = reduce(ybus, 1, 1.0, [2, 3])
    b = reduce(ybus, 1, 1.0, [3, 2])
    assert np.allclose(a.z, b.z[np.ix_([1, 0], [1, 0])])
    assert np.allclose(a.e, b.e[[1, 0]])


@pytest.mark.parametrize('ordering', [[2], [2, 3, 4], [2, 2, 3]])
def test_reduce__invalid_ordering(three_bus, ordering):
    with pytest.raises(CaseSemanticError):
        reduce(build_ybus(three_bus), 1, 1.0, ordering)


def test_reduce__islanded_bus():
    text = (
        '{"buses": [{"id": 1, "role": "slack"}, {"id": 2}, {"id": 3}], '
        '"branches": [{"from_bus": 1, "to_bus": 2, "x": 0.1}]}'
    )
    with pytest.raises(SingularReducedAdmittance):
        thevenin_model(parse_case(text, 'json'))


def test_voltages_and_currents(ieee39):
    model = thevenin_model(ieee39)
    rng = np.random.default_rng(39)
    i = rng.standard_normal(model.n) + 1j * rng.standard_normal(model.n)
    v = voltages_from_currents(model, i)
    assert np.allclose(currents_from_voltages(model, v), i)

    # Zero injection gives the open-circuit voltages
    assert np.allclose(voltages_from_currents(model, np.zeros(model.n)), model.e)


def test_voltages_from_currents__dimension_mismatch(three_bus):
    model = thevenin_model(three_bus)
    with pytest.raises(DimensionMismatch):
        voltages_from_currents(model, np.zeros(3))
    with pytest.raises(DimensionMismatch):
        currents_from_voltages(model, np.zeros((2, 2)))


def test_reduce__current_limited_bus_keeps_position(three_bus):
    profile = ConstraintProfile.from_case(three_bus).with_mode(3, BusMode.current(1.0, 0.8))
    model = thevenin_model(three_bus, profile)
    assert model.bus_order == [2, 3]
    assert model.n_u == 1
