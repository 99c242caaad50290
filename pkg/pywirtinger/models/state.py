from typing import Dict, List, Optional

import numpy as np

from pywirtinger.constants import DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE, TableRow
from pywirtinger.models import BaseModel, define_array_model, define_model, field, positive


@define_array_model
class TheveninModel(BaseModel):
    """Reduced Thevenin form ``V = E + Z I`` of a network with the slack bus eliminated.
    Rows and columns follow ``bus_order`` (unconstrained buses first, then constrained).
    """

    z: np.ndarray = field(repr=False, doc='Reduced impedance matrix, the inverse of Y_NN')
    e: np.ndarray = field(repr=False, doc='Open-circuit source voltages')
    y_nn: np.ndarray = field(repr=False, doc='Admittance matrix with the slack row/column removed')
    slack_id: int = field(doc='Slack bus number')
    v_slack: complex = field(default=1 + 0j, converter=complex, doc='Slack voltage phasor')
    bus_order: List[int] = field(factory=list, doc='Non-slack bus ids in matrix order')
    n_u: int = field(default=0, doc='Number of unconstrained buses')

    @property
    def n(self) -> int:
        return len(self.bus_order)

    @property
    def n_c(self) -> int:
        return self.n - self.n_u

    @property
    def index(self) -> Dict[int, int]:
        return {bus_id: k for k, bus_id in enumerate(self.bus_order)}

    @property
    def z_self(self) -> np.ndarray:
        return np.diag(self.z).copy()


@define_model
class SolverOptions(BaseModel):
    """Newton-Raphson settings. Without a ``start`` point, iteration begins from a flat start."""

    tolerance: float = field(default=DEFAULT_TOLERANCE, validator=positive, doc='Max mismatch')
    max_iterations: int = field(default=DEFAULT_MAX_ITERATIONS, validator=positive)
    start: Optional['OperatingPoint'] = field(default=None, repr=False, doc='Warm start point')

    @property
    def is_warm(self) -> bool:
        return self.start is not None


@define_array_model
class OperatingPoint(BaseModel):
    """A power flow solution: voltage, current, and power injection phasors at all non-slack
    buses, in ``bus_order``, plus solver diagnostics
    """

    v: np.ndarray = field(repr=False, doc='Bus voltages')
    i: np.ndarray = field(repr=False, doc='Injected currents')
    s: np.ndarray = field(repr=False, doc='Injected complex power, S = V I*')
    bus_order: List[int] = field(factory=list)
    slack_id: int = field(default=None)
    v_slack: complex = field(default=1 + 0j, converter=complex)
    converged: bool = field(default=False)
    iterations: int = field(default=0)
    max_mismatch: float = field(default=float('inf'))
    trace: List[float] = field(factory=list, repr=False, doc='Max mismatch at each iteration')

    @property
    def index(self) -> Dict[int, int]:
        return {bus_id: k for k, bus_id in enumerate(self.bus_order)}

    def voltage(self, bus_id: int) -> complex:
        return complex(self.v[self.index[bus_id]])

    def current(self, bus_id: int) -> complex:
        return complex(self.i[self.index[bus_id]])

    def power(self, bus_id: int) -> complex:
        return complex(self.s[self.index[bus_id]])

    def voltages_by_bus(self) -> Dict[int, complex]:
        """Voltages at all buses, including the slack"""
        voltages = {self.slack_id: self.v_slack}
        voltages.update({bus_id: complex(v) for bus_id, v in zip(self.bus_order, self.v)})
        return voltages

    def reordered(self, bus_order: List[int]) -> 'OperatingPoint':
        """Get a copy with phasors permuted into a different bus order"""
        perm = [self.index[bus_id] for bus_id in bus_order]
        return OperatingPoint(
            v=self.v[perm],
            i=self.i[perm],
            s=self.s[perm],
            bus_order=list(bus_order),
            slack_id=self.slack_id,
            v_slack=self.v_slack,
            converged=self.converged,
            iterations=self.iterations,
            max_mismatch=self.max_mismatch,
            trace=list(self.trace),
        )

    @property
    def row(self) -> TableRow:
        return {
            'Converged': self.converged,
            'Iterations': self.iterations,
            'Max mismatch': self.max_mismatch,
            'Min |V|': float(np.min(np.abs(self.v))) if len(self.v) else None,
        }

    def __str__(self) -> str:
        status = 'converged' if self.converged else 'not converged'
        return f'{status} in {self.iterations} iterations (max mismatch {self.max_mismatch:.3e})'
