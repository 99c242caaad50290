"""
Shared unit test-related utilities.
Pytest will also automatically pick up any fixtures defined here.
"""
import os
from os.path import join

import numpy as np
import pytest

from pywirtinger import enable_logging
from pywirtinger.casemodel import load_case_file, parse_case, scale_loading
from pywirtinger.constants import CASE_DATA_DIR, SAMPLE_DATA_DIR
from pywirtinger.models import ConstraintProfile, OperatingPoint, SolverOptions
from pywirtinger.powerflow import newton_solve
from pywirtinger.thevenin import thevenin_model, voltages_from_currents

# If ipdb is installed, register it as the default debugger
try:
    import ipdb  # noqa: F401

    os.environ['PYTHONBREAKPOINT'] = 'ipdb.set_trace'
except ImportError:
    pass

enable_logging('DEBUG')

TWO_BUS_CASE = 'two_bus.json'
THREE_BUS_CASE = 'three_bus.json'
IEEE39_CASE = 'case39.m'
IEEE39_MODIFIED_CASE = 'ieee39_modified.json'


def sample_data_path(filename):
    return join(SAMPLE_DATA_DIR, filename)


def load_sample_data(filename):
    with open(sample_data_path(filename), encoding='utf-8') as fh:
        return fh.read()


def case_data_path(filename):
    return join(CASE_DATA_DIR, filename)


def two_bus_case(x: float = 0.25, p_load: float = 1.0, q_load: float = 0.0):
    """Slack bus behind a lossless line, feeding one load"""
    text = (
        '{"name": "two_bus_x", "buses": ['
        '{"id": 1, "role": "slack", "v_set": 1.0}, '
        f'{{"id": 2, "role": "pq", "p_load": {p_load}, "q_load": {q_load}}}], '
        f'"branches": [{{"from_bus": 1, "to_bus": 2, "r": 0.0, "x": {x}}}]}}'
    )
    return parse_case(text, 'json')


def solve(case, lam: float = 1.0, profile=None, targets: str = 'loads'):
    """Scale and solve a case, and return the scaled case, profile, and operating point"""
    profile = profile or ConstraintProfile.from_case(case)
    scaled = scale_loading(case, lam, targets)
    point = newton_solve(scaled, profile.rescheduled(scaled), SolverOptions())
    return scaled, profile.rescheduled(scaled), point


def random_point(case, profile, seed: int = 0, scale: float = 0.5) -> OperatingPoint:
    """A random (not necessarily power flow consistent) state in current coordinates"""
    rng = np.random.default_rng(seed)
    model = thevenin_model(case, profile)
    i = scale * (rng.standard_normal(model.n) + 1j * rng.standard_normal(model.n))
    v = voltages_from_currents(model, i)
    return OperatingPoint(
        v=v,
        i=i,
        s=v * np.conj(i),
        bus_order=list(model.bus_order),
        slack_id=model.slack_id,
        v_slack=model.v_slack,
    )


@pytest.fixture
def two_bus():
    return load_case_file(case_data_path(TWO_BUS_CASE))


@pytest.fixture
def three_bus():
    return load_case_file(case_data_path(THREE_BUS_CASE))


@pytest.fixture
def ieee39():
    return load_case_file(case_data_path(IEEE39_CASE))


@pytest.fixture
def ieee39_modified():
    return load_case_file(case_data_path(IEEE39_MODIFIED_CASE))
