# flake8: noqa: F401, F403
# isort: skip_file
from logging import getLogger

logger = getLogger('pywirtinger')
__version__ = '0.1.0'

# Ignore ImportErrors if this is imported outside a virtualenv
try:
    from pywirtinger.constants import *
    from pywirtinger.exceptions import *
    from pywirtinger.models import *
    from pywirtinger.casemodel import build_ybus, load_case_file, parse_case, scale_loading
    from pywirtinger.thevenin import reduce, thevenin_model
    from pywirtinger.powerflow import enforce_current_limits, newton_solve, solve_with_limits
    from pywirtinger.wirtinger import analyze_point, dominance_report, reduced_jacobian
    from pywirtinger.indices import evaluate_indices, kr_index, l_index, scr
    from pywirtinger.equivalence import column_map, row_map, verify
    from pywirtinger.sweep import LoadingSweep, evaluate_point, find_boundary, run_sweep
    from pywirtinger.formatters import enable_logging, format_table, pprint
except ImportError as e:
    logger.warning(e, exc_info=True)
