import numpy as np
import pytest

from pywirtinger.converters import (
    ensure_list,
    format_number,
    parse_bus_value,
    parse_lambda_range,
    safe_split,
    to_json_complex,
    to_json_number,
)


@pytest.mark.parametrize(
    'value, expected',
    [
        ('1.0', [1.0]),
        ('0.1,0.3, 0.5', [0.1, 0.3, 0.5]),
        ('0.2:1.0:0.2', [0.2, 0.4, 0.6, 0.8, 1.0]),
        ('0:0.3:0.1', [0.0, 0.1, 0.2, 0.3]),
        ('0.5:0.5:0.1', [0.5]),
        ('0.1:0.35:0.1', [0.1, 0.2, 0.3]),
        ('1.0:0.5:0.1', []),
        ('0.1:0.5:0', []),
        ('', []),
        (None, []),
    ],
)
def test_parse_lambda_range(value, expected):
    assert parse_lambda_range(value) == pytest.approx(expected)


@pytest.mark.parametrize('value', ['abc', '0.1:0.5', '0.1:0.5:0.1:1', '0.1,x'])
def test_parse_lambda_range__invalid(value):
    with pytest.raises(ValueError):
        parse_lambda_range(value)


def test_parse_lambda_range__no_float_drift():
    schedule = parse_lambda_range('0:1:0.1')
    assert len(schedule) == 11
    assert schedule[3] == 0.3
    assert schedule[-1] == 1.0


@pytest.mark.parametrize(
    'value, expected',
    [('33:1.2', (33, 1.2)), ('5:100', (5, 100.0))],
)
def test_parse_bus_value(value, expected):
    assert parse_bus_value(value) == expected


@pytest.mark.parametrize('value', ['33', '33:', 'x:1.2', ':1.2'])
def test_parse_bus_value__invalid(value):
    with pytest.raises(ValueError):
        parse_bus_value(value)


@pytest.mark.parametrize(
    'value, expected',
    [
        ('a,b, c', ['a', 'b', 'c']),
        ('a,,b,', ['a', 'b']),
        (1, ['1']),
    ],
)
def test_safe_split(value, expected):
    assert safe_split(value) == expected


@pytest.mark.parametrize(
    'value, expected',
    [
        (None, []),
        ([1, 2], [1, 2]),
        ((1, 2), [1, 2]),
        (np.array([1, 2]), [1, 2]),
        (1, [1]),
        ('abc', ['abc']),
    ],
)
def test_ensure_list(value, expected):
    assert ensure_list(value) == expected


@pytest.mark.parametrize(
    'value, expected',
    [
        (0.597412345, '0.597412'),
        (3.7320508, '3.73205'),
        (1.0, '1'),
        (1.5e-9, '1.5e-09'),
        (float('inf'), 'inf'),
        (float('-inf'), '-inf'),
        (None, '--'),
    ],
)
def test_format_number(value, expected):
    assert format_number(value) == expected


def test_format_number__digits():
    assert format_number(0.597412345, digits=3) == '0.597'


@pytest.mark.parametrize(
    'value, expected',
    [
        (0.1234567890123, 0.1234567890123),
        (np.float64(2.5), 2.5),
        (float('inf'), 'inf'),
        (float('-inf'), '-inf'),
        (float('nan'), 'nan'),
        (np.nan, 'nan'),
        (None, None),
    ],
)
def test_to_json_number(value, expected):
    assert to_json_number(value) == expected


def test_to_json_complex():
    assert to_json_complex(0.5 - 1j) == {'re': 0.5, 'im': -1.0}
    assert to_json_complex(np.complex128(2j)) == {'re': 0.0, 'im': 2.0}
