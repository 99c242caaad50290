from io import StringIO
from logging import DEBUG, INFO, WARNING, getLogger

import pytest
from rich.console import Console
from rich.table import Table

from pywirtinger.constants import CSV_COLUMNS, LOG_LEVEL_ENV
from pywirtinger.formatters import (
    _str,
    enable_logging,
    format_report_tables,
    format_table,
    pprint,
    print_report,
    render_csv,
    render_json,
)
from pywirtinger.models import (
    Boundary,
    BusReportRow,
    EquivalenceReport,
    ModeTransition,
    ReportDocument,
)

ROWS = [
    BusReportRow(lambda_value=0.5, bus=2, mode='U', c_w=7.5958, l_index=0.1316, scr=4.0),
    BusReportRow(lambda_value=1.0, bus=2, mode='U', c_w=3.7320508, k_r=3.7320508, scr=4.0),
    BusReportRow(lambda_value=1.0, bus=3, mode='CI', c_w=float('inf')),
]


def render(renderable) -> str:
    console = Console(file=StringIO(), width=200)
    console.print(renderable)
    return console.file.getvalue()


@pytest.fixture
def report():
    return ReportDocument(
        metadata={'command': 'sweep', 'case': 'two_bus'},
        rows=ROWS,
        boundaries=[Boundary(predicate='conv', lambda_star=2.0, tolerance=1e-4, solves=9)],
        transitions=[ModeTransition(lambda_value=1.0, bus=3, from_mode='CV', to_mode='CI')],
        diagnostics=['lambda=2.5: Did not converge'],
    )


# Tables
# --------------------


@pytest.mark.parametrize('values', [ROWS[0], ROWS], ids=['single', 'list'])
def test_format_table(values):
    table = format_table(values, title='Buses')
    assert isinstance(table, Table)
    assert table.title == 'Buses'
    assert [column.header for column in table.columns] == list(ROWS[0].row.keys())

    rendered = render(table)
    assert 'C_W' in rendered
    assert '7.5958' in rendered


def test_format_table__empty():
    assert format_table([]) == ''
    assert format_table(None) == ''


@pytest.mark.parametrize(
    'value, expected',
    [
        (True, 'yes'),
        (False, 'no'),
        (None, '--'),
        (3.7320508, '3.73205'),
        (float('inf'), 'inf'),
        (2, '2'),
        ('CI', 'CI'),
    ],
)
def test_str(value, expected):
    assert _str(value) == expected


def test_format_report_tables(report):
    tables = format_report_tables(report)
    assert [table.title for table in tables] == ['Buses', 'Boundaries', 'Mode transitions']
    assert tables[0].row_count == 3


def test_format_report_tables__equivalence():
    report = ReportDocument(equivalence=[EquivalenceReport(lambda_value=0.5)])
    tables = format_report_tables(report)
    assert [table.title for table in tables] == ['Equivalence']
    assert 'FAIL' in render(tables[0])


def test_print_report(report):
    console = Console(file=StringIO(), width=200)
    print_report(report, console=console)
    output = console.file.getvalue()
    assert 'Mode transitions' in output
    assert 'CV' in output and 'CI' in output
    assert output.rstrip().endswith('lambda=2.5: Did not converge')


def test_pprint(capsys):
    pprint(ROWS)
    assert '3.73205' in capsys.readouterr().out


# JSON and CSV
# --------------------


def test_render_json(report):
    output = render_json(report)
    assert output.endswith('}\n')
    assert output.index('"metadata"') < output.index('"rows"') < output.index('"diagnostics"')
    assert '"c_w": "inf"' in output
    assert '"c_w": 3.7320508' in output


def test_render_json__empty():
    assert render_json(ReportDocument()).count('[]') == 5


def test_render_csv():
    lines = render_csv(ROWS).splitlines()
    assert lines[0] == ','.join(CSV_COLUMNS)
    assert lines[1] == '0.5,2,U,7.5958,,0.1316,4,,'
    assert lines[2] == '1,2,U,3.73205,3.73205,,4,,'
    assert lines[3] == '1,3,CI,inf,,,,,'


def test_render_csv__no_rows():
    assert render_csv([]) == ','.join(CSV_COLUMNS) + '\n'


# Logging
# --------------------


@pytest.mark.parametrize(
    'level, env, expected',
    [
        ('debug', None, DEBUG),
        (None, 'info', INFO),
        (None, None, WARNING),
        ('debug', 'warning', DEBUG),
    ],
)
def test_enable_logging(monkeypatch, level, env, expected):
    if env:
        monkeypatch.setenv(LOG_LEVEL_ENV, env)
    else:
        monkeypatch.delenv(LOG_LEVEL_ENV, raising=False)

    enable_logging(level)
    assert getLogger('pywirtinger').level == expected
    enable_logging('DEBUG')
