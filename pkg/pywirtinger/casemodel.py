"""Case file parsing, validation, admittance matrix assembly, and load scaling.

Two input formats are supported:

* MATPOWER ``.m`` files: only the ``baseMVA``, ``bus``, ``gen``, and ``branch`` matrices are read.
  Powers are converted from MW/MVAr to per-unit, and angles from degrees to radians.
* Native JSON files, which hold per-unit values directly and add a ``converters`` block with
  current limits and control modes. They may also set a ``load_model`` (``'constant_power'`` or
  ``'constant_impedance'``) and a list of ``monitored_buses`` for system-level C_W.
"""
import json
import re
from logging import getLogger
from os.path import exists, splitext
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from attr import evolve

from pywirtinger.constants import (
    CASE_DATA_DIR,
    CONSTANT_IMPEDANCE,
    CONSTANT_POWER,
    IBR_ONLY,
    LOADS_AND_IBR,
    LOADS_ONLY,
    MATPOWER_BUS_TYPES,
    MATPOWER_FIELDS,
    MIN_IMPEDANCE,
    ROLE_PV,
    ROLE_SLACK,
    SCALING_TARGETS,
    AnyFile,
    JsonDict,
)
from pywirtinger.exceptions import CaseSemanticError, CaseSyntaxError
from pywirtinger.models import (
    AdmittanceMatrix,
    BranchRecord,
    BusRecord,
    ConverterRecord,
    GenRecord,
    NetworkCase,
)

MATPOWER = 'matpower'
NATIVE_JSON = 'json'
CASE_FORMATS = [MATPOWER, NATIVE_JSON]
CASE_EXTENSIONS = {'.m': MATPOWER, '.json': NATIVE_JSON}

# Minimum column counts for MATPOWER matrices; later columns take MATPOWER defaults if absent
MIN_BUS_COLUMNS = 6
MIN_GEN_COLUMNS = 6
MIN_BRANCH_COLUMNS = 4

MATRIX_PATTERN = re.compile(r'mpc\.(\w+)\s*=\s*')
NUMBER_SEPARATORS = re.compile(r'[\s,]+')
GENERATOR_FIELDS = ['bus', 'p_set', 'q_set', 'v_set', 'status']

logger = getLogger(__name__)


# Parsing
# --------------------


def parse_case(text: str, format: str = MATPOWER, name: str = None) -> NetworkCase:
    """Parse and validate a case from text

    Args:
        text: Case file contents
        format: Either ``'matpower'`` or ``'json'``
        name: Case name; for MATPOWER text, defaults to the function name declared in the file

    Raises:
        :py:exc:`.CaseSyntaxError` if the text is not well formed
        :py:exc:`.CaseSemanticError` if the text describes an invalid network
    """
    if format == MATPOWER:
        case = _parse_matpower(text, name)
    elif format == NATIVE_JSON:
        case = _parse_native_json(text, name)
    else:
        raise ValueError(f'Unknown case format: {format}. Expected one of {CASE_FORMATS}')
    validate(case)
    logger.debug(f'Parsed {case}')
    return case


def _parse_matpower(text: str, name: Optional[str]) -> NetworkCase:
    text = _blank_comments(text)
    if name is None:
        match = re.search(r'function\s+\w+\s*=\s*(\w+)', text)
        name = match.group(1) if match else 'case'

    matrices: Dict[str, List[List[float]]] = {}
    base_mva = None
    for match in MATRIX_PATTERN.finditer(text):
        field_name, start = match.group(1), match.end()
        if field_name not in MATPOWER_FIELDS:
            logger.warning(f'Ignoring unsupported MATPOWER field: mpc.{field_name}')
            continue
        if field_name == 'baseMVA':
            base_mva = _parse_scalar(text, start)
        else:
            matrices[field_name] = _parse_matrix(text, start)

    if base_mva is None:
        raise CaseSyntaxError('Missing mpc.baseMVA')
    for field_name in ['bus', 'branch']:
        if field_name not in matrices:
            raise CaseSyntaxError(f'Missing mpc.{field_name}')

    buses = [_matpower_bus(row, base_mva) for row in matrices['bus']]
    generators = [_matpower_gen(row, base_mva) for row in matrices.get('gen', [])]
    branches = [_matpower_branch(row) for row in matrices['branch']]

    # Regulated buses take their voltage setpoint from their first in-service generator
    setpoints = {}
    for gen in generators:
        if gen.status:
            setpoints.setdefault(gen.bus, gen.v_set)
    buses = [
        evolve(bus, v_set=setpoints[bus.id])
        if bus.role in (ROLE_SLACK, ROLE_PV) and bus.id in setpoints
        else bus
        for bus in buses
    ]
    return NetworkCase(
        name=name, base_mva=base_mva, buses=buses, branches=branches, generators=generators
    )


def _blank_comments(text: str) -> str:
    """Replace ``%`` comments with spaces, so character positions are unchanged"""
    return re.sub(r'%[^\n]*', lambda m: ' ' * len(m.group(0)), text)


def _parse_scalar(text: str, start: int) -> float:
    end = text.find(';', start)
    if end < 0:
        raise CaseSyntaxError('Unterminated scalar', start, text[start : start + 10].strip())
    return _to_float(text[start:end].strip(), start)


def _parse_matrix(text: str, start: int) -> List[List[float]]:
    if text[start : start + 1] != '[':
        raise CaseSyntaxError('Expected "["', start, text[start : start + 10].strip())
    end = text.find(']', start)
    if end < 0:
        raise CaseSyntaxError('Unterminated matrix', start, '[')

    rows = []
    offset = start + 1
    for line in re.split(r'[;\n]', text[start + 1 : end]):
        tokens = [t for t in NUMBER_SEPARATORS.split(line) if t]
        if tokens:
            rows.append([_to_float(t, offset + line.find(t)) for t in tokens])
        offset += len(line) + 1
    return rows


def _to_float(token: str, position: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise CaseSyntaxError('Invalid number', position, token)


def _column(row: List[float], index: int, default: float) -> float:
    return row[index] if len(row) > index else default


def _check_columns(row: List[float], minimum: int, table: str):
    if len(row) < minimum:
        raise CaseSyntaxError(f'mpc.{table} row has {len(row)} columns; expected at least {minimum}')


def _matpower_bus(row: List[float], base_mva: float) -> BusRecord:
    _check_columns(row, MIN_BUS_COLUMNS, 'bus')
    bus_type = int(row[1])
    if bus_type not in MATPOWER_BUS_TYPES:
        raise CaseSemanticError(f'Bus {int(row[0])} has unsupported type {bus_type}')
    return BusRecord(
        id=int(row[0]),
        role=MATPOWER_BUS_TYPES[bus_type],
        p_load=row[2] / base_mva,
        q_load=row[3] / base_mva,
        shunt_g=row[4] / base_mva,
        shunt_b=row[5] / base_mva,
        v_set=_column(row, 7, 1.0),
        v_angle=np.radians(_column(row, 8, 0.0)),
    )


def _matpower_gen(row: List[float], base_mva: float) -> GenRecord:
    _check_columns(row, MIN_GEN_COLUMNS, 'gen')
    return GenRecord(
        bus=int(row[0]),
        p_set=row[1] / base_mva,
        q_set=row[2] / base_mva,
        v_set=row[5],
        status=_column(row, 7, 1.0) > 0,
    )


def _matpower_branch(row: List[float]) -> BranchRecord:
    _check_columns(row, MIN_BRANCH_COLUMNS, 'branch')
    return BranchRecord(
        from_bus=int(row[0]),
        to_bus=int(row[1]),
        r=row[2],
        x=row[3],
        b_charging=_column(row, 4, 0.0),
        tap_ratio=_column(row, 8, 0.0) or 1.0,
        phase_shift=np.radians(_column(row, 9, 0.0)),
        status=_column(row, 10, 1.0) > 0,
    )


def _parse_native_json(text: str, name: Optional[str]) -> NetworkCase:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise CaseSyntaxError(f'Invalid JSON: {e.msg}', e.pos, text[e.pos : e.pos + 10].strip())
    if not isinstance(data, dict):
        raise CaseSyntaxError('Expected a JSON object at the top level', 0)

    try:
        buses = [BusRecord.from_json(_lower_role(b)) for b in data.get('buses', [])]
        branches = BranchRecord.from_json_list(data.get('branches', []))
        generators = GenRecord.from_json_list(data.get('generators', []))
        converters = ConverterRecord.from_json_list(data.get('converters', []))
        case = NetworkCase(
            name=name or data.get('name', 'case'),
            base_mva=data.get('base_mva', 100.0),
            buses=buses,
            branches=branches,
            generators=generators,
            load_model=data.get('load_model', CONSTANT_POWER),
            monitored=[int(k) for k in data.get('monitored_buses', [])],
        )
    except (TypeError, ValueError) as e:
        raise CaseSemanticError(f'Invalid case record: {e}') from e
    return _apply_converters(case, converters)


def _lower_role(record: JsonDict) -> JsonDict:
    if isinstance(record.get('role'), str):
        record = {**record, 'role': record['role'].lower()}
    return record


def _apply_converters(case: NetworkCase, converters: List[ConverterRecord]) -> NetworkCase:
    """Mark every generator at each converter's bus as converter-interfaced"""
    if not converters:
        return case
    by_bus = {c.bus: c for c in converters}
    missing = set(by_bus) - {gen.bus for gen in case.generators}
    if missing:
        raise CaseSemanticError(f'Converters reference buses without generators: {sorted(missing)}')

    def _convert(gen: GenRecord) -> GenRecord:
        converter = by_bus.get(gen.bus)
        if converter is None:
            return gen
        return evolve(
            gen,
            converter=True,
            mode_hint=converter.mode,
            i_max=converter.i_max,
            v_set=converter.v_set if converter.v_set is not None else gen.v_set,
        )

    return evolve(case, generators=[_convert(gen) for gen in case.generators])


# Validation
# --------------------


def validate(case: NetworkCase):
    """Check that a case describes a valid network

    Raises:
        :py:exc:`.CaseSemanticError` on duplicate buses, a slack count other than one, dangling or
        zero-impedance branches, generators at unknown buses, nonpositive voltage setpoints, or
        monitored buses that are unknown or the slack
    """
    ids = case.bus_ids
    duplicates = sorted({k for k in ids if ids.count(k) > 1})
    if duplicates:
        raise CaseSemanticError(f'Duplicate bus ids: {duplicates}')

    slack_ids = [bus.id for bus in case.buses if bus.role == ROLE_SLACK]
    if not slack_ids:
        raise CaseSemanticError('Missing slack bus')
    if len(slack_ids) > 1:
        raise CaseSemanticError(f'Only one slack bus is supported; found {slack_ids}')

    for bus in case.buses:
        if bus.role in (ROLE_SLACK, ROLE_PV) and not bus.v_set > 0:
            raise CaseSemanticError(f'Bus {bus.id} ({bus.role}) requires v_set > 0')

    known = set(ids)
    for branch in case.branches:
        dangling = {branch.from_bus, branch.to_bus} - known
        if dangling:
            raise CaseSemanticError(
                f'Dangling branch {branch.from_bus}-{branch.to_bus}: unknown bus {sorted(dangling)}'
            )
        if branch.status and abs(branch.series_impedance) < MIN_IMPEDANCE:
            raise CaseSemanticError(f'Zero-impedance branch {branch.from_bus}-{branch.to_bus}')
        if branch.status and branch.tap_ratio <= 0:
            raise CaseSemanticError(f'Branch {branch.from_bus}-{branch.to_bus} has tap ratio <= 0')

    for gen in case.generators:
        if gen.bus not in known:
            raise CaseSemanticError(f'Generator at unknown bus {gen.bus}')
        if gen.status and gen.v_set <= 0:
            raise CaseSemanticError(f'Generator at bus {gen.bus} requires v_set > 0')

    unmonitorable = sorted(k for k in case.monitored if k not in known or k in slack_ids)
    if unmonitorable:
        raise CaseSemanticError(f'Monitored buses must be non-slack case buses: {unmonitorable}')


# Admittance matrix
# --------------------


def branch_admittances(branch: BranchRecord) -> Tuple[complex, complex, complex, complex]:
    """Pi-model admittances ``(Y_ff, Y_ft, Y_tf, Y_tt)`` with the tap on the from side"""
    ys = 1 / branch.series_impedance
    tap = branch.tap_ratio * np.exp(1j * branch.phase_shift)
    y_tt = ys + 1j * branch.b_charging / 2
    y_ff = y_tt / (tap * np.conj(tap))
    y_ft = -ys / np.conj(tap)
    y_tf = -ys / tap
    return y_ff, y_ft, y_tf, y_tt


def build_ybus(case: NetworkCase) -> AdmittanceMatrix:
    """Assemble the dense bus admittance matrix. Out-of-service branches are ignored. With the
    constant-impedance load model, each load is added as a shunt admittance ``conj(S_load)``, sized
    at 1.0 p.u. voltage.
    """
    index_map = {bus_id: k for k, bus_id in enumerate(case.bus_ids)}
    y = np.zeros((len(index_map), len(index_map)), dtype=complex)

    for branch in case.branches:
        if not branch.status:
            continue
        f, t = index_map[branch.from_bus], index_map[branch.to_bus]
        y_ff, y_ft, y_tf, y_tt = branch_admittances(branch)
        y[f, f] += y_ff
        y[f, t] += y_ft
        y[t, f] += y_tf
        y[t, t] += y_tt

    for bus in case.buses:
        k = index_map[bus.id]
        y[k, k] += complex(bus.shunt_g, bus.shunt_b)
        if case.load_model == CONSTANT_IMPEDANCE:
            y[k, k] += np.conj(bus.s_load)

    return AdmittanceMatrix(entries=y, index_map=index_map)


# Loading
# --------------------


def scale_loading(case: NetworkCase, lam: float, targets: str = LOADS_ONLY) -> NetworkCase:
    """Get a copy of a case with loads and/or converter active power setpoints scaled.

    Args:
        case: Network case
        lam: Loading parameter
        targets: ``'loads'`` to scale bus loads; ``'ibr'`` to scale converter-interfaced
            generators' active power; ``'loads_and_ibr'`` for both
    """
    if lam < 0:
        raise ValueError(f'Loading parameter must be >= 0 (got {lam})')
    if targets not in SCALING_TARGETS:
        raise ValueError(f'Unknown scaling target: {targets}. Expected one of {SCALING_TARGETS}')

    buses, generators = case.buses, case.generators
    if targets in (LOADS_ONLY, LOADS_AND_IBR):
        buses = [evolve(b, p_load=lam * b.p_load, q_load=lam * b.q_load) for b in buses]
    if targets in (IBR_ONLY, LOADS_AND_IBR):
        generators = [evolve(g, p_set=lam * g.p_set) if g.converter else g for g in generators]
    return evolve(case, buses=buses, generators=generators)


# Serialization and file loading
# --------------------


def case_to_json(case: NetworkCase) -> JsonDict:
    """Convert a case to the native JSON schema"""
    converters = [
        ConverterRecord(bus=g.bus, mode=g.mode_hint, i_max=g.i_max, v_set=g.v_set).to_dict()
        for g in case.generators
        if g.converter
    ]
    return {
        'name': case.name,
        'base_mva': case.base_mva,
        'load_model': case.load_model,
        'monitored_buses': list(case.monitored),
        'buses': [b.to_dict() for b in case.buses],
        'branches': [b.to_dict() for b in case.branches],
        'generators': [
            {k: v for k, v in g.to_dict().items() if k in GENERATOR_FIELDS} for g in case.generators
        ],
        'converters': converters,
    }


def serialize_case(case: NetworkCase) -> str:
    """Serialize a case to native JSON text"""
    return json.dumps(case_to_json(case), indent=2)


def detect_format(path: AnyFile) -> str:
    extension = splitext(str(path))[1].lower()
    if extension not in CASE_EXTENSIONS:
        raise ValueError(f'Cannot infer case format from {path}; expected .m or .json')
    return CASE_EXTENSIONS[extension]


def resolve_case_path(path: AnyFile) -> Path:
    """Find a case file by path. A bare file name with no directory part that does not exist
    locally is looked up among the cases bundled with this package, with or without its extension.
    """
    path = Path(path).expanduser()
    if path.exists():
        return path
    if path.parent != Path('.'):
        raise FileNotFoundError(f'Case file not found: {path}')
    bundled = Path(CASE_DATA_DIR) / path.name
    if bundled.exists():
        return bundled
    for extension in CASE_EXTENSIONS:
        bundled = Path(CASE_DATA_DIR) / f'{path.name}{extension}'
        if bundled.exists():
            return bundled
    raise FileNotFoundError(f'Case file not found: {path}')


def load_case_file(path: AnyFile, format: str = None) -> NetworkCase:
    """Read and parse a case file. The format is inferred from the file extension if not given."""
    path = resolve_case_path(path)
    format = format or detect_format(path)
    logger.info(f'Reading case from {path}')
    return parse_case(path.read_text(encoding='utf-8'), format)


def bundled_cases() -> List[str]:
    """Names of the case files bundled with this package"""
    if not exists(CASE_DATA_DIR):
        return []
    return sorted(p.name for p in Path(CASE_DATA_DIR).iterdir() if p.suffix in CASE_EXTENSIONS)
