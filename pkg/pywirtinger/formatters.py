"""Utilities for rendering analysis results as terminal tables, JSON, or CSV, and for configuring
logging output.

Table functions will accept any of the following:

* A single model object
* A list of model objects
* A :py:class:`.ReportDocument`
"""
import csv
import json
from io import StringIO
from logging import basicConfig, getLogger
from os import getenv
from typing import Iterable, List, Optional, Sequence

from pywirtinger.constants import CSV_COLUMNS, LOG_LEVEL_ENV
from pywirtinger.converters import ensure_list, format_number
from pywirtinger.models import BaseModel, BusReportRow, ReportDocument

# Default colors for table headers
HEADER_COLORS = {
    'Boundary': 'violet',
    'Bus': 'cyan',
    'C_W': 'green',
    'Chain residual': 'blue',
    'Converged': 'white',
    'Dominant': 'white',
    'From': 'magenta',
    'K_R': 'blue',
    'L': 'blue',
    'Lambda': 'cyan',
    'Margin': 'green',
    'Mode': 'violet',
    'Residual': 'blue',
    'SCR': 'blue',
    'Solves': 'white',
    'To': 'magenta',
    'Tolerance': 'white',
    'Verdict': 'green',
}


def enable_logging(level: Optional[str] = None):
    """Configure logging to standard error with prettier tracebacks, formatting, and terminal
    colors (if supported).

    Args:
        level: Logging level to use. If not specified, ``PYWIRTINGER_LOG_LEVEL`` is used if set,
            otherwise ``WARNING``.
    """
    from rich.console import Console
    from rich.logging import RichHandler

    level = (level or getenv(LOG_LEVEL_ENV) or 'WARNING').upper()
    basicConfig(
        format='%(message)s',
        datefmt='[%m-%d %H:%M:%S]',
        handlers=[RichHandler(console=Console(stderr=True), rich_tracebacks=True, markup=False)],
    )
    getLogger('pywirtinger').setLevel(level)


def format_table(values, title: str = None):
    """Format model objects as a rich table"""
    from rich.box import SIMPLE_HEAVY
    from rich.table import Column, Table

    values = ensure_list(values)
    if not values:
        return ''
    headers = {k: HEADER_COLORS.get(k, '') for k in values[0].row.keys()}
    columns = [Column(header, style=style) for header, style in headers.items()]
    table = Table(
        *columns,
        title=title,
        box=SIMPLE_HEAVY,
        header_style='bold white',
        row_styles=['dim', 'none'],
    )
    for obj in values:
        table.add_row(*[_str(value) for value in obj.row.values()])
    return table


def _str(value) -> str:
    """Display floats with a fixed count of significant digits"""
    if isinstance(value, bool):
        return 'yes' if value else 'no'
    if isinstance(value, float):
        return format_number(value)
    if value is None:
        return '--'
    return str(value)


def format_report_tables(report: ReportDocument) -> List:
    """Format each nonempty section of a report as a separate table"""
    sections = [
        ('Buses', report.rows),
        ('Boundaries', report.boundaries),
        ('Mode transitions', report.transitions),
        ('Equivalence', report.equivalence),
    ]
    return [format_table(values, title=title) for title, values in sections if values]


def render_json(report: ReportDocument) -> str:
    """Render a report as JSON, with keys in a fixed order and full float precision"""
    return json.dumps(report.to_dict(), indent=2) + '\n'


def render_csv(rows: Sequence[BusReportRow]) -> str:
    """Render per-bus rows as CSV, with the columns given by :py:data:`.CSV_COLUMNS`"""
    output = StringIO()
    writer = csv.writer(output, lineterminator='\n')
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_csv_value(value) for value in row.csv_values])
    return output.getvalue()


def _csv_value(value) -> str:
    if value is None:
        return ''
    if isinstance(value, float):
        return format_number(value)
    return str(value)


def print_report(report: ReportDocument, console=None):
    """Print a report as tables, followed by any diagnostics"""
    from rich.console import Console

    console = console or Console()
    for table in format_report_tables(report):
        console.print(table)
    for message in report.diagnostics:
        console.print(message, style='yellow', markup=False)


def pprint(values: Iterable[BaseModel]):
    """Pretty-print any model object or list into a condensed summary"""
    from rich import print as rich_print

    rich_print(format_table(values))
