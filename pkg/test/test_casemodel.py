import json
from math import radians
from pathlib import Path

import numpy as np
import pytest

from pywirtinger.casemodel import (
    build_ybus,
    bundled_cases,
    case_to_json,
    detect_format,
    load_case_file,
    parse_case,
    resolve_case_path,
    scale_loading,
    serialize_case,
)
from pywirtinger.constants import CASE_DATA_DIR
from pywirtinger.exceptions import CaseSemanticError, CaseSyntaxError
from pywirtinger.models import NetworkCase
from test.conftest import load_sample_data, sample_data_path

MINIMAL_CASE = {
    'name': 'minimal',
    'buses': [
        {'id': 1, 'role': 'slack', 'v_set': 1.0},
        {'id': 2, 'role': 'pq', 'p_load': 0.5},
    ],
    'branches': [{'from_bus': 1, 'to_bus': 2, 'x': 0.1}],
}


def _variant(**changes) -> str:
    case = json.loads(json.dumps(MINIMAL_CASE))
    case.update(changes)
    return json.dumps(case)


# MATPOWER parsing
# --------------------


def test_parse_matpower():
    case = parse_case(load_sample_data('case3.m'))
    assert case.name == 'case3'
    assert case.base_mva == 100
    assert len(case.buses) == 3 and len(case.branches) == 2 and len(case.generators) == 2
    assert case.slack_bus.id == 1

    load_bus = case.bus_map[2]
    assert load_bus.role == 'pq'
    assert load_bus.p_load == pytest.approx(2.0)
    assert load_bus.q_load == pytest.approx(1.0)
    assert case.generators_at(3)[0].p_set == pytest.approx(0.8)
    assert case.bus_map[3].role == 'pv' and case.bus_map[3].v_set == 1.0

    # A tap ratio of 0 means no transformer
    assert all(branch.tap_ratio == 1.0 for branch in case.branches)
    assert case.branches[0].series_impedance == pytest.approx(0.08 + 0.4j)


def test_parse_matpower__ignores_unsupported_fields(caplog):
    parse_case(load_sample_data('case3.m'))
    assert 'mpc.gencost' in caplog.text
    assert 'mpc.version' in caplog.text


def test_parse_matpower__syntax_error():
    text = load_sample_data('case3_syntax_error.m')
    with pytest.raises(CaseSyntaxError) as excinfo:
        parse_case(text)
    assert excinfo.value.token == '2x0'
    assert text[excinfo.value.position : excinfo.value.position + 3] == '2x0'


@pytest.mark.parametrize(
    'text',
    [
        'mpc.bus = [1 3 0 0 0 0];',
        'mpc.baseMVA = 100; mpc.bus = [1 3 0 0 0 0;',
        'mpc.baseMVA = 100; mpc.bus = [1 3 0 0 0 0]; mpc.branch = [1 2 0.1];',
    ],
)
def test_parse_matpower__malformed(text):
    with pytest.raises(CaseSyntaxError):
        parse_case(text)


def test_parse_matpower__angles_in_radians():
    text = load_sample_data('case3.m').replace(
        '1\t3\t0\t0\t0\t0\t1\t1\t0\t', '1\t3\t0\t0\t0\t0\t1\t1\t30\t'
    )
    case = parse_case(text)
    assert case.slack_bus.v_angle == pytest.approx(radians(30))
    assert np.angle(case.slack_voltage) == pytest.approx(radians(30))


def test_parse_ieee39(ieee39):
    assert len(ieee39.buses) == 39
    assert len(ieee39.branches) == 46
    assert len(ieee39.generators) == 10
    assert ieee39.slack_bus.id == 31
    assert ieee39.bus_map[39].p_load == pytest.approx(11.04)
    assert ieee39.voltage_setpoint(36) == pytest.approx(1.0636)


# Native JSON parsing
# --------------------


def test_parse_native_json(ieee39_modified):
    assert len(ieee39_modified.buses) == 39
    assert ieee39_modified.converter_buses == [30, 33, 34, 35, 36, 37]

    bus_33 = ieee39_modified.generators_at(33)[0]
    assert bus_33.converter is True
    assert bus_33.mode_hint == 'grid_forming'
    assert ieee39_modified.current_limit(33) == pytest.approx(2.05)
    assert ieee39_modified.generators_at(30)[0].mode_hint == 'grid_following'
    assert ieee39_modified.current_limit(30) is None
    assert ieee39_modified.generators_at(32)[0].converter is False
    assert ieee39_modified.load_model == 'constant_impedance'
    assert ieee39_modified.monitored == [30, 33, 34, 35, 36, 37]


def test_parse_native_json__defaults():
    case = parse_case(_variant(), 'json')
    assert case.load_model == 'constant_power'
    assert case.monitored == []


@pytest.mark.parametrize(
    'changes, error',
    [
        ({'load_model': 'zip'}, 'Invalid case record'),
        ({'monitored_buses': [1]}, 'Monitored buses'),
        ({'monitored_buses': [9]}, 'Monitored buses'),
    ],
    ids=['bad_load_model', 'slack_monitored', 'unknown_monitored'],
)
def test_parse_native_json__invalid_options(changes, error):
    with pytest.raises(CaseSemanticError, match=error):
        parse_case(_variant(**changes), 'json')


def test_parse_native_json__role_case_insensitive():
    case = parse_case(_variant(buses=[{'id': 1, 'role': 'SLACK'}, {'id': 2, 'role': 'PQ'}]), 'json')
    assert case.slack_bus.id == 1


def test_parse_native_json__syntax_error():
    with pytest.raises(CaseSyntaxError) as excinfo:
        parse_case('{"buses": [}', 'json')
    assert excinfo.value.position == 11


def test_parse_native_json__converter_without_generator():
    with pytest.raises(CaseSemanticError):
        parse_case(_variant(converters=[{'bus': 2, 'mode': 'grid_forming'}]), 'json')


def test_parse_case__unknown_format():
    with pytest.raises(ValueError):
        parse_case('', 'psse')


# Validation
# --------------------


@pytest.mark.parametrize(
    'changes',
    [
        {'buses': [{'id': 1, 'role': 'slack'}, {'id': 1, 'role': 'pq'}]},
        {'buses': [{'id': 1, 'role': 'pq'}, {'id': 2, 'role': 'pq'}]},
        {'buses': [{'id': 1, 'role': 'slack'}, {'id': 2, 'role': 'slack'}]},
        {'buses': [{'id': 1, 'role': 'slack', 'v_set': 0}, {'id': 2, 'role': 'pq'}]},
        {'branches': [{'from_bus': 1, 'to_bus': 3, 'x': 0.1}]},
        {'branches': [{'from_bus': 1, 'to_bus': 2, 'r': 0, 'x': 0}]},
        {'branches': [{'from_bus': 1, 'to_bus': 2, 'x': 0.1, 'tap_ratio': -1}]},
        {'generators': [{'bus': 5, 'p_set': 1.0}]},
    ],
    ids=[
        'duplicate_bus',
        'no_slack',
        'two_slacks',
        'zero_setpoint',
        'dangling_branch',
        'zero_impedance',
        'negative_tap',
        'unknown_generator_bus',
    ],
)
def test_validate(changes):
    with pytest.raises(CaseSemanticError):
        parse_case(_variant(**changes), 'json')


def test_validate__out_of_service_zero_impedance_branch():
    branches = [
        {'from_bus': 1, 'to_bus': 2, 'x': 0.1},
        {'from_bus': 1, 'to_bus': 2, 'r': 0, 'x': 0, 'status': False},
    ]
    case = parse_case(_variant(branches=branches), 'json')
    assert len(case.branches) == 2


# Admittance matrix
# --------------------


def test_build_ybus__radial(three_bus):
    ybus = build_ybus(three_bus)
    y = ybus.entries
    assert y.shape == (3, 3)
    assert np.allclose(y, y.T)
    # Without shunts or line charging, each row sums to zero
    assert np.allclose(y.sum(axis=1), 0)
    assert y[0, 1] == pytest.approx(-1 / (0.08 + 0.4j))
    assert y[0, 2] == 0


def test_build_ybus__taps_and_charging(ieee39):
    ybus = build_ybus(ieee39)
    y = ybus.entries
    assert ybus.order == 39
    assert np.allclose(y, y.T)

    # Transformer 6-31 with tap 1.07 on the from side
    k6, k31 = ybus.index_map[6], ybus.index_map[31]
    assert y[k6, k31] == pytest.approx(-1 / (0.025j * 1.07))
    assert y[k31, k31] == pytest.approx(1 / 0.025j)

    # Line charging makes the network capacitive overall
    assert y.sum().imag > 0


def test_build_ybus__skips_out_of_service_branches():
    branches = [
        {'from_bus': 1, 'to_bus': 2, 'x': 0.1},
        {'from_bus': 1, 'to_bus': 2, 'x': 0.1, 'status': False},
    ]
    y = build_ybus(parse_case(_variant(branches=branches), 'json')).entries
    assert y[0, 1] == pytest.approx(10j)


def test_build_ybus__constant_impedance_loads():
    power = parse_case(_variant(), 'json')
    impedance = parse_case(_variant(load_model='constant_impedance'), 'json')
    y_power, y_impedance = build_ybus(power).entries, build_ybus(impedance).entries

    # The 0.5 p.u. load becomes a 0.5 p.u. shunt conductance at bus 2 only
    assert y_impedance[1, 1] - y_power[1, 1] == pytest.approx(0.5)
    assert y_impedance[0, 0] == y_power[0, 0]
    assert y_impedance[0, 1] == y_power[0, 1]

    # Its power no longer appears in the scheduled injection
    assert power.scheduled_injection(2) == pytest.approx(-0.5)
    assert impedance.scheduled_injection(2) == 0


def test_build_ybus__scaled_impedance_loads(ieee39_modified):
    ybus = build_ybus(ieee39_modified)
    scaled = build_ybus(scale_loading(ieee39_modified, 0.5, 'loads'))
    k = ybus.index_map[39]
    shunt = ybus.entries[k, k] - scaled.entries[k, k]
    assert shunt == pytest.approx(0.5 * (3.312 - 0.75j))


def test_ybus_block(three_bus):
    ybus = build_ybus(three_bus)
    block = ybus.block([2, 3], [1])
    assert block.shape == (2, 1)
    assert block[0, 0] == pytest.approx(ybus.entries[1, 0])
    assert block[1, 0] == 0


# Loading
# --------------------


def test_scale_loading__loads(three_bus):
    scaled = scale_loading(three_bus, 0.5)
    assert scaled.bus_map[2].s_load == pytest.approx(1.0 + 0.5j)
    assert scaled.generators_at(3)[0].p_set == pytest.approx(0.8)
    # Original is unchanged
    assert three_bus.bus_map[2].s_load == pytest.approx(2 + 1j)


def test_scale_loading__converters(ieee39_modified):
    scaled = scale_loading(ieee39_modified, 0.5, 'ibr')
    assert scaled.generators_at(33)[0].p_set == pytest.approx(0.5 * 1.896)
    assert scaled.generators_at(32)[0].p_set == pytest.approx(1.95)
    assert scaled.bus_map[39].p_load == pytest.approx(3.312)

    both = scale_loading(ieee39_modified, 0.5, 'loads_and_ibr')
    assert both.generators_at(33)[0].p_set == pytest.approx(0.5 * 1.896)
    assert both.bus_map[39].p_load == pytest.approx(0.5 * 3.312)


@pytest.mark.parametrize('lam, targets', [(-0.1, 'loads'), (1.0, 'everything')])
def test_scale_loading__invalid(three_bus, lam, targets):
    with pytest.raises(ValueError):
        scale_loading(three_bus, lam, targets)


# Files and serialization
# --------------------


def test_serialize_case(ieee39_modified):
    reparsed = parse_case(serialize_case(ieee39_modified), 'json')
    assert reparsed.bus_ids == ieee39_modified.bus_ids
    assert reparsed.load_model == ieee39_modified.load_model
    assert reparsed.monitored == ieee39_modified.monitored
    assert reparsed.converter_buses == ieee39_modified.converter_buses
    assert reparsed.current_limit(33) == pytest.approx(2.05)
    assert np.allclose(build_ybus(reparsed).entries, build_ybus(ieee39_modified).entries)


def test_case_to_json(three_bus):
    data = case_to_json(three_bus)
    assert list(data) == [
        'name',
        'base_mva',
        'load_model',
        'monitored_buses',
        'buses',
        'branches',
        'generators',
        'converters',
    ]
    assert data['load_model'] == 'constant_power'
    assert data['converters'] == []
    assert data['generators'][1] == {
        'bus': 3,
        'p_set': 0.8,
        'q_set': 0.0,
        'v_set': 1.0,
        'status': True,
    }


@pytest.mark.parametrize(
    'path, expected_format',
    [('case39.m', 'matpower'), ('three_bus.JSON', 'json'), ('/tmp/x/case.json', 'json')],
)
def test_detect_format(path, expected_format):
    assert detect_format(path) == expected_format


def test_detect_format__unknown():
    with pytest.raises(ValueError):
        detect_format('case.raw')


@pytest.mark.parametrize('name', ['three_bus.json', 'three_bus', 'two_bus'])
def test_resolve_case_path__bundled(name):
    assert resolve_case_path(name).parent == Path(CASE_DATA_DIR)


@pytest.mark.parametrize(
    'name',
    ['no_such_case.json', 'nonexistent_dir/three_bus.json', './no_such_dir/three_bus'],
)
def test_resolve_case_path__missing(name):
    with pytest.raises(FileNotFoundError):
        resolve_case_path(name)


def test_resolve_case_path__explicit_path_not_replaced(tmp_path):
    """A path with a directory part never falls back to a bundled case of the same name"""
    with pytest.raises(FileNotFoundError):
        resolve_case_path(tmp_path / 'three_bus.json')

    local = tmp_path / 'three_bus.json'
    local.write_text(serialize_case(parse_case(_variant(), 'json')))
    assert resolve_case_path(local) == local


def test_load_case_file():
    case = load_case_file(sample_data_path('case3.m'))
    assert isinstance(case, NetworkCase)
    assert case.name == 'case3'


def test_bundled_cases():
    assert bundled_cases() == [
        'case39.m',
        'ieee39_modified.json',
        'nine_bus_placeholder.json',
        'three_bus.json',
        'two_bus.json',
    ]


def test_bundled_cases__all_valid():
    for name in bundled_cases():
        case = load_case_file(name)
        assert case.slack_bus is not None
