from os.path import abspath, dirname, join
from pathlib import Path
from typing import IO, Any, Dict, Optional, Tuple, Union

import numpy as np

# Solver settings
DEFAULT_TOLERANCE = 1e-8  # Max per-unit mismatch for a converged power flow
DEFAULT_MAX_ITERATIONS = 50
MAX_STEP_HALVINGS = 4  # Damped Newton: halve the step at most this many times per iteration

# Converter current limit enforcement
MAX_LIMIT_ITERATIONS = 10  # Outer fixed-point iterations before declaring mode oscillation
CURRENT_LIMIT_HYSTERESIS = 1e-9  # Relative margin on |I| before a limit counts as violated

# Linear algebra tolerances
PIVOT_TOLERANCE = 1e-13  # Relative to max |a_ij|

# Degeneracy gates
MIN_CURRENT = 1e-10  # Below this, a constrained bus has no defined current phase
MIN_VOLTAGE = 1e-6  # Below this, the column map is considered pathological
MIN_IMPEDANCE = 1e-12
MIN_ACTIVE_POWER = 1e-12  # Below this, SCR and K_R are undefined
MIN_COLUMN_MAP_SINGULAR_VALUE = 1e-10
EQUIVALENCE_TOLERANCE = 1e-9
CONV_SINGULAR_RATIO = 1e-8  # sigma_min(J_conv) / ||J_conv|| below this counts as singular

# Sweep and boundary search
DEFAULT_BISECTION_TOLERANCE = 1e-4
DEFAULT_L_INDEX_THRESHOLD = 0.8
DEFAULT_WORKERS = 4  # Thread pool size for flat-start sweeps

# Bus roles, as used in case files
ROLE_SLACK = 'slack'
ROLE_PQ = 'pq'
ROLE_PV = 'pv'
BUS_ROLES = [ROLE_SLACK, ROLE_PQ, ROLE_PV]

# MATPOWER bus type codes
MATPOWER_BUS_TYPES = {1: ROLE_PQ, 2: ROLE_PV, 3: ROLE_SLACK}
MATPOWER_FIELDS = ['baseMVA', 'bus', 'gen', 'branch']

# Converter control modes
GRID_FOLLOWING = 'grid_following'
GRID_FORMING = 'grid_forming'
CONVERTER_MODES = [GRID_FOLLOWING, GRID_FORMING]

# Bus operating modes within a constraint profile
UNCONSTRAINED = 'unconstrained'
VOLTAGE_CONSTRAINED = 'voltage'
CURRENT_CONSTRAINED = 'current'
BUS_MODES = [UNCONSTRAINED, VOLTAGE_CONSTRAINED, CURRENT_CONSTRAINED]
MODE_LABELS = {UNCONSTRAINED: 'U', VOLTAGE_CONSTRAINED: 'CV', CURRENT_CONSTRAINED: 'CI'}

# Tangent factor kinds
TANGENT_ZERO = 'zero'
TANGENT_KAPPA = 'kappa'
TANGENT_ZETA = 'zeta'

# Quantities scaled by the loading parameter
LOADS_ONLY = 'loads'
LOADS_AND_IBR = 'loads_and_ibr'
IBR_ONLY = 'ibr'
SCALING_TARGETS = [LOADS_ONLY, LOADS_AND_IBR, IBR_ONLY]

# Load models: constant power is held in the power flow; constant impedance is folded into Y_bus
CONSTANT_POWER = 'constant_power'
CONSTANT_IMPEDANCE = 'constant_impedance'
LOAD_MODELS = [CONSTANT_POWER, CONSTANT_IMPEDANCE]

# C_W denominator variants: the actual off-diagonal row sum of the reduced Jacobian, or
# |I_i| * sum of off-diagonal |Z_ij| with no 1/2 factor at constrained buses
CW_ROW = 'row'
CW_PRINTED = 'printed'
CW_VARIANTS = [CW_ROW, CW_PRINTED]

# Boundary predicates
DOMINANCE_LOSS = 'dominance'
CW_UNITY = 'cw'
CONV_SINGULAR = 'conv'
L_INDEX_THRESHOLD = 'lindex'
BOUNDARY_PREDICATES = [DOMINANCE_LOSS, CW_UNITY, CONV_SINGULAR, L_INDEX_THRESHOLD]

# Index kinds
L_INDEX = 'l_index'
SCR_INDEX = 'scr'
KR_INDEX = 'k_r'

# Report output
OUTPUT_FORMATS = ['table', 'json', 'csv']
CSV_COLUMNS = ['lambda', 'bus', 'mode', 'c_w', 'k_r', 'l_index', 'scr', 'margin', 'sigma_min_conv']
SIGNIFICANT_DIGITS = 6

# Environment variable used to set the default log level for the CLI
LOG_LEVEL_ENV = 'PYWIRTINGER_LOG_LEVEL'

# Project directories
PROJECT_DIR = abspath(dirname(dirname(__file__)))
CASE_DATA_DIR = join(abspath(dirname(__file__)), 'data')
SAMPLE_DATA_DIR = join(PROJECT_DIR, 'test', 'sample_data')

# Type aliases
AnyFile = Union[IO, Path, str]
ComplexArray = np.ndarray
RealArray = np.ndarray
Bracket = Tuple[float, float]
JsonDict = Dict[str, Any]
OptionalFloat = Optional[float]
TableRow = Dict[str, Any]
