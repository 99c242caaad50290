"""Network case records. All quantities are per-unit on the case's base power, angles in radians."""
from typing import Dict, List, Optional

import numpy as np

from pywirtinger.constants import (
    BUS_ROLES,
    CONSTANT_IMPEDANCE,
    CONSTANT_POWER,
    CONVERTER_MODES,
    GRID_FOLLOWING,
    GRID_FORMING,
    LOAD_MODELS,
    ROLE_PQ,
    ROLE_PV,
    ROLE_SLACK,
    TableRow,
)
from pywirtinger.models import BaseModel, define_array_model, define_model, field, is_in, positive


@define_model
class BusRecord(BaseModel):
    """A network bus with its load and shunt"""

    id: int = field(doc='Bus number')
    role: str = field(default=ROLE_PQ, validator=is_in(BUS_ROLES), options=BUS_ROLES, doc='Bus role')
    p_load: float = field(default=0.0, converter=float, doc='Active load')
    q_load: float = field(default=0.0, converter=float, doc='Reactive load')
    v_set: float = field(default=1.0, converter=float, doc='Voltage magnitude setpoint (PV/slack)')
    v_angle: float = field(default=0.0, converter=float, doc='Voltage angle (slack only)')
    shunt_g: float = field(default=0.0, converter=float, doc='Shunt conductance')
    shunt_b: float = field(default=0.0, converter=float, doc='Shunt susceptance')

    @property
    def s_load(self) -> complex:
        return complex(self.p_load, self.q_load)

    @property
    def row(self) -> TableRow:
        return {
            'Bus': self.id,
            'Role': self.role,
            'P load': self.p_load,
            'Q load': self.q_load,
            'V set': self.v_set,
        }

    def __str__(self) -> str:
        return f'Bus {self.id} ({self.role}): load {self.p_load:+.4f}{self.q_load:+.4f}j'


@define_model
class BranchRecord(BaseModel):
    """A pi-model branch (line or transformer)"""

    from_bus: int = field(doc='From bus number')
    to_bus: int = field(doc='To bus number')
    r: float = field(default=0.0, converter=float, doc='Series resistance')
    x: float = field(default=0.0, converter=float, doc='Series reactance')
    b_charging: float = field(default=0.0, converter=float, doc='Total line charging susceptance')
    tap_ratio: float = field(default=1.0, converter=float, doc='Off-nominal tap ratio, from side')
    phase_shift: float = field(default=0.0, converter=float, doc='Phase shift')
    status: bool = field(default=True, converter=bool, doc='In-service flag')

    @property
    def series_impedance(self) -> complex:
        return complex(self.r, self.x)

    @property
    def row(self) -> TableRow:
        return {
            'From': self.from_bus,
            'To': self.to_bus,
            'R': self.r,
            'X': self.x,
            'B': self.b_charging,
            'Tap': self.tap_ratio,
        }

    def __str__(self) -> str:
        return f'Branch {self.from_bus}-{self.to_bus}: z={self.r:.4f}{self.x:+.4f}j'


@define_model
class GenRecord(BaseModel):
    """A generating unit: either a synchronous machine or a converter-interfaced resource"""

    bus: int = field(doc='Bus number')
    p_set: float = field(default=0.0, converter=float, doc='Active power setpoint')
    q_set: float = field(default=0.0, converter=float, doc='Reactive power setpoint')
    v_set: float = field(default=1.0, converter=float, doc='Voltage magnitude setpoint')
    i_max: Optional[float] = field(default=None, validator=positive, doc='Current limit')
    mode_hint: str = field(
        default=GRID_FORMING,
        validator=is_in(CONVERTER_MODES),
        options=CONVERTER_MODES,
        doc='Grid-following (PQ) or grid-forming (PV) control',
    )
    status: bool = field(default=True, converter=bool, doc='In-service flag')
    converter: bool = field(default=False, converter=bool, doc='Converter-interfaced resource')

    @property
    def s_set(self) -> complex:
        return complex(self.p_set, self.q_set)

    @property
    def row(self) -> TableRow:
        return {
            'Bus': self.bus,
            'P': self.p_set,
            'Q': self.q_set,
            'V set': self.v_set,
            'I max': self.i_max,
            'Mode': self.mode_hint,
        }


@define_model
class ConverterRecord(BaseModel):
    """An entry in a native JSON case's ``converters`` block"""

    bus: int = field(doc='Bus number of the generator this converter interfaces')
    mode: str = field(default=GRID_FORMING, validator=is_in(CONVERTER_MODES), options=CONVERTER_MODES)
    i_max: Optional[float] = field(default=None, validator=positive, doc='Current limit')
    v_set: Optional[float] = field(default=None, doc='Voltage setpoint override')


@define_model
class NetworkCase(BaseModel):
    """A parsed and validated network, with one slack bus"""

    name: str = field(default='case', doc='Case identifier')
    base_mva: float = field(default=100.0, converter=float, validator=positive, doc='Base power')
    buses: List[BusRecord] = field(factory=list)
    branches: List[BranchRecord] = field(factory=list)
    generators: List[GenRecord] = field(factory=list)
    load_model: str = field(
        default=CONSTANT_POWER,
        validator=is_in(LOAD_MODELS),
        options=LOAD_MODELS,
        doc='How bus loads are represented in the power flow',
    )
    monitored: List[int] = field(factory=list, doc='Buses that system-level C_W is taken over')

    @property
    def bus_ids(self) -> List[int]:
        return [bus.id for bus in self.buses]

    @property
    def bus_map(self) -> Dict[int, BusRecord]:
        return {bus.id: bus for bus in self.buses}

    @property
    def slack_bus(self) -> BusRecord:
        return next(bus for bus in self.buses if bus.role == ROLE_SLACK)

    @property
    def slack_voltage(self) -> complex:
        slack = self.slack_bus
        return slack.v_set * np.exp(1j * slack.v_angle)

    @property
    def active_generators(self) -> List[GenRecord]:
        return [gen for gen in self.generators if gen.status]

    @property
    def converter_buses(self) -> List[int]:
        return sorted({gen.bus for gen in self.active_generators if gen.converter})

    def generators_at(self, bus_id: int) -> List[GenRecord]:
        return [gen for gen in self.active_generators if gen.bus == bus_id]

    def scheduled_injection(self, bus_id: int) -> complex:
        """Net scheduled complex power injection at a bus: generation minus load. Constant-impedance
        loads are part of the admittance matrix instead, so only generation counts.
        """
        generation = sum((gen.s_set for gen in self.generators_at(bus_id)), 0j)
        if self.load_model == CONSTANT_IMPEDANCE:
            return generation
        return generation - self.bus_map[bus_id].s_load

    def voltage_setpoint(self, bus_id: int) -> float:
        """Voltage setpoint of a regulated bus, taken from its generators if it has any"""
        gens = self.generators_at(bus_id)
        return gens[0].v_set if gens else self.bus_map[bus_id].v_set

    def current_limit(self, bus_id: int) -> Optional[float]:
        """Combined current limit of the converters at a bus, if any are limited"""
        limits = [gen.i_max for gen in self.generators_at(bus_id) if gen.i_max is not None]
        return sum(limits) if limits else None

    def __str__(self) -> str:
        return (
            f'{self.name}: {len(self.buses)} buses, {len(self.branches)} branches, '
            f'{len(self.generators)} generators, base {self.base_mva:g} MVA'
        )


@define_array_model
class AdmittanceMatrix(BaseModel):
    """Dense bus admittance matrix, with rows in case bus order"""

    entries: np.ndarray = field(repr=False, doc='Complex admittance matrix')
    index_map: Dict[int, int] = field(factory=dict, doc='Bus id -> row index')

    @property
    def order(self) -> int:
        return self.entries.shape[0]

    @property
    def bus_ids(self) -> List[int]:
        return list(self.index_map)

    def indices(self, bus_ids) -> List[int]:
        return [self.index_map[bus_id] for bus_id in bus_ids]

    def block(self, row_ids, col_ids) -> np.ndarray:
        """Get a sub-matrix by bus ids"""
        return self.entries[np.ix_(self.indices(row_ids), self.indices(col_ids))]
