"""Type conversion utilities used for case input, command-line flags, and report output"""
import math
from typing import Any, Dict, List, MutableSequence, Optional, Tuple, Union

import numpy as np

from pywirtinger.constants import SIGNIFICANT_DIGITS


# Command-line value parsing
# --------------------


def parse_lambda_range(value: str) -> List[float]:
    """Parse a loading schedule given either as ``start:stop:step`` (inclusive of ``stop``), a
    comma-separated list, or a single value. Returns an empty list for an empty range.

    Example:
        >>> parse_lambda_range('0.2:1.0:0.2')
        [0.2, 0.4, 0.6, 0.8, 1.0]
        >>> parse_lambda_range('0.1,0.3')
        [0.1, 0.3]
    """
    value = (value or '').strip()
    if not value:
        return []
    if ':' not in value:
        return [float(v) for v in safe_split(value, ',')]

    parts = [float(v) for v in safe_split(value, ':')]
    if len(parts) != 3:
        raise ValueError(f'Expected start:stop:step, got {value!r}')
    start, stop, step = parts
    if step <= 0 or stop < start:
        return []

    n_steps = int(math.floor((stop - start) / step + 1e-9))
    return [round(start + k * step, 12) for k in range(n_steps + 1)]


def parse_bus_value(value: str) -> Tuple[int, float]:
    """Parse a ``bus:value`` pair, for example a current limit given as ``33:1.2``"""
    bus, _, number = value.partition(':')
    if not number:
        raise ValueError(f'Expected bus:value, got {value!r}')
    return int(bus), float(number)


def safe_split(value: Any, delimiter: str = ',') -> List[str]:
    """Split a delimited string, dropping empty tokens"""
    return [s.strip() for s in str(value).split(delimiter) if s.strip()]


def ensure_list(value: Any) -> MutableSequence[Any]:
    """Convert a single object or other collection into a list"""
    if value is None:
        return []
    if isinstance(value, MutableSequence):
        return value
    elif isinstance(value, (tuple, set, np.ndarray)):
        return list(value)
    else:
        return [value]


# Number formatting
# --------------------


def format_number(value: Optional[float], digits: int = SIGNIFICANT_DIGITS) -> str:
    """Format a number with a fixed count of significant digits. Missing values are shown as
    ``--``, matching the convention for an index that is undefined at a bus.

    Example:
        >>> format_number(0.597412345)
        '0.597412'
        >>> format_number(None)
        '--'
    """
    if value is None:
        return '--'
    if math.isnan(value):
        return 'nan'
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return f'{value:.{digits}g}'


def to_json_number(value: Optional[float]) -> Union[float, str, None]:
    """Convert a float to a JSON-safe value, keeping full precision. Infinite and NaN values (e.g.,
    C_W at a passive bus) become strings, since JSON has no representation for them.
    """
    if value is None:
        return None
    value = float(value)
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return value


def to_json_complex(value: complex) -> Dict[str, float]:
    return {'re': float(np.real(value)), 'im': float(np.imag(value))}
