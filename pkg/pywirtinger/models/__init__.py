"""Data models for network cases, constraint profiles, operating points, and analysis reports"""
# flake8: noqa: F401
# isort: skip_file
from typing import Callable, Dict, Iterable

import attr
from attr import define, validators

from pywirtinger.models.base import BaseModel, T


# Aliases and minor helper functions used by model classes
# --------------------------------------------------------

# Attrs class decorators with the most commonly used options
define_model: Callable = define(auto_attribs=False)
# Models holding numpy arrays, which don't support elementwise ``==`` as a bool
define_array_model: Callable = define(auto_attribs=False, eq=False)


def field(doc: str = '', options: Iterable = None, metadata: Dict = None, **kwargs):
    """A field with extra metadata for documentation and options"""
    metadata = metadata or {}
    metadata['doc'] = doc
    metadata['options'] = options
    return attr.field(**kwargs, metadata=metadata)


def is_in(options: Iterable):
    """Validator for an optional multiple-choice attribute"""
    return validators.in_(list(options) + [None])


def positive(instance, attribute, value):
    """Validator for a strictly positive number"""
    if value is not None and not value > 0:
        raise ValueError(f'{attribute.name} must be > 0 (got {value})')


# Models imported in order of dependencies
# --------------------------------------------------------

from pywirtinger.models.case import (
    AdmittanceMatrix,
    BranchRecord,
    BusRecord,
    ConverterRecord,
    GenRecord,
    NetworkCase,
)
from pywirtinger.models.profile import BusMode, ConstraintProfile
from pywirtinger.models.state import OperatingPoint, SolverOptions, TheveninModel
from pywirtinger.models.jacobian import DominanceReport, ReducedJacobian, TangentFactor
from pywirtinger.models.report import (
    Boundary,
    BusReportRow,
    EquivalenceReport,
    IndexVector,
    ModeTransition,
    ReportDocument,
    SweepResult,
    SweepSample,
)
