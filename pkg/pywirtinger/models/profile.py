from typing import Dict, Iterable, List, Mapping, Optional

from attr import evolve

from pywirtinger.constants import (
    BUS_MODES,
    CURRENT_CONSTRAINED,
    GRID_FOLLOWING,
    MODE_LABELS,
    ROLE_PV,
    UNCONSTRAINED,
    VOLTAGE_CONSTRAINED,
    TableRow,
)
from pywirtinger.exceptions import CaseSemanticError
from pywirtinger.models import BaseModel, define_model, field, is_in, positive
from pywirtinger.models.case import NetworkCase


@define_model
class BusMode(BaseModel):
    """Operating mode of a non-slack bus. A voltage-constrained bus may carry a current limit,
    which is watched during limit enforcement; a current-constrained bus holds that limit.
    """

    kind: str = field(default=UNCONSTRAINED, validator=is_in(BUS_MODES), options=BUS_MODES)
    v_set: Optional[float] = field(default=None, validator=positive, doc='Voltage setpoint')
    i_max: Optional[float] = field(default=None, validator=positive, doc='Current limit')
    p_set: Optional[float] = field(default=None, doc='Scheduled active power when current-limited')

    @classmethod
    def unconstrained(cls) -> 'BusMode':
        return cls(kind=UNCONSTRAINED)

    @classmethod
    def voltage(cls, v_set: float, i_max: float = None) -> 'BusMode':
        return cls(kind=VOLTAGE_CONSTRAINED, v_set=v_set, i_max=i_max)

    @classmethod
    def current(cls, i_max: float, p_set: float = None) -> 'BusMode':
        if i_max is None:
            raise ValueError('A current-constrained bus requires i_max')
        return cls(kind=CURRENT_CONSTRAINED, i_max=i_max, p_set=p_set)

    @property
    def is_constrained(self) -> bool:
        return self.kind != UNCONSTRAINED

    @property
    def label(self) -> str:
        return MODE_LABELS[self.kind]

    def __str__(self) -> str:
        if self.kind == VOLTAGE_CONSTRAINED:
            return f'CV(v_set={self.v_set:g})'
        if self.kind == CURRENT_CONSTRAINED:
            return f'CI(i_max={self.i_max:g})'
        return 'U'


@define_model
class ConstraintProfile(BaseModel):
    """Per-bus operating modes of all non-slack buses, which partition them into unconstrained (U)
    and constrained (C) sets. Bus order is always U first, then C, each in case order; switching a
    bus between voltage and current constraints does not change its position.
    """

    slack_id: int = field(doc='Slack bus number')
    modes: Dict[int, BusMode] = field(factory=dict, doc='Non-slack bus id -> mode')
    passive: List[int] = field(
        factory=list, doc='Unconstrained buses with no scheduled injection, whose current is zero'
    )
    monitored: List[int] = field(factory=list, doc='Buses that system-level C_W is taken over')

    def __attrs_post_init__(self):
        if self.slack_id in self.modes:
            raise CaseSemanticError(f'Slack bus {self.slack_id} cannot have an operating mode')
        for bus_id, mode in self.modes.items():
            if mode.kind == VOLTAGE_CONSTRAINED and not mode.v_set:
                raise CaseSemanticError(f'Voltage-constrained bus {bus_id} requires v_set > 0')
        unknown = (set(self.passive) | set(self.monitored)) - set(self.modes)
        if unknown:
            raise CaseSemanticError(f'Not a non-slack bus: {sorted(unknown)}')
        constrained = [k for k in self.passive if self.modes[k].is_constrained]
        if constrained:
            raise CaseSemanticError(f'Constrained buses cannot be passive: {constrained}')

    @classmethod
    def from_case(
        cls,
        case: NetworkCase,
        pv: Iterable[int] = (),
        pq: Iterable[int] = (),
        limits: Mapping[int, float] = None,
        monitored: Iterable[int] = None,
    ) -> 'ConstraintProfile':
        """Derive default modes from bus roles and converter control modes, with optional overrides.

        Args:
            case: Network case
            pv: Buses to treat as voltage-constrained regardless of their role
            pq: Buses to treat as unconstrained regardless of their role
            limits: Current limits by bus, overriding those declared by converters. Only
                voltage-regulated buses can be current-limited.
            monitored: Buses that system-level C_W is taken over; defaults to the case's own list,
                and an empty list means every bus

        Raises:
            :py:exc:`.CaseSemanticError` if an override names an unknown bus, or a current limit
            names a bus that does not regulate its voltage
        """
        pv, pq, limits = set(pv), set(pq), dict(limits or {})
        monitored = list(case.monitored if monitored is None else monitored)
        unknown = (pv | pq | set(limits) | set(monitored)) - set(case.bus_ids)
        if unknown:
            raise CaseSemanticError(f'Profile overrides reference unknown buses: {sorted(unknown)}')

        slack_id = case.slack_bus.id
        modes = {}
        for bus in case.buses:
            if bus.id == slack_id:
                continue
            converters = [gen for gen in case.generators_at(bus.id) if gen.converter]
            if converters:
                regulated = converters[0].mode_hint != GRID_FOLLOWING
            else:
                regulated = bus.role == ROLE_PV
            if bus.id in pv:
                regulated = True
            elif bus.id in pq:
                regulated = False

            if regulated:
                i_max = limits.get(bus.id, case.current_limit(bus.id))
                modes[bus.id] = BusMode.voltage(case.voltage_setpoint(bus.id), i_max)
            else:
                modes[bus.id] = BusMode.unconstrained()

        unregulated = sorted(k for k in limits if k == slack_id or not modes[k].is_constrained)
        if unregulated:
            raise CaseSemanticError(
                f'Current limits given for buses that do not regulate voltage: {unregulated}'
            )
        passive = [
            k
            for k, mode in modes.items()
            if not mode.is_constrained and case.scheduled_injection(k) == 0
        ]
        return cls(slack_id=slack_id, modes=modes, passive=passive, monitored=monitored)

    @property
    def u_buses(self) -> List[int]:
        return [k for k, mode in self.modes.items() if mode.kind == UNCONSTRAINED]

    @property
    def c_buses(self) -> List[int]:
        return [k for k, mode in self.modes.items() if mode.kind != UNCONSTRAINED]

    @property
    def cv_buses(self) -> List[int]:
        return [k for k, mode in self.modes.items() if mode.kind == VOLTAGE_CONSTRAINED]

    @property
    def ci_buses(self) -> List[int]:
        return [k for k, mode in self.modes.items() if mode.kind == CURRENT_CONSTRAINED]

    @property
    def bus_order(self) -> List[int]:
        return self.u_buses + self.c_buses

    @property
    def n_u(self) -> int:
        return len(self.u_buses)

    @property
    def n_c(self) -> int:
        return len(self.c_buses)

    def mode(self, bus_id: int) -> BusMode:
        return self.modes[bus_id]

    def is_passive(self, bus_id: int) -> bool:
        return bus_id in self.passive

    def with_mode(self, bus_id: int, mode: BusMode) -> 'ConstraintProfile':
        """Get a copy of this profile with one bus mode replaced"""
        modes = dict(self.modes)
        modes[bus_id] = mode
        passive = [k for k in self.passive if k != bus_id or not mode.is_constrained]
        return evolve(self, modes=modes, passive=passive)

    def rescheduled(self, case: NetworkCase) -> 'ConstraintProfile':
        """Get a copy with current-limited buses' active power updated from a (rescaled) case"""
        modes = {
            k: evolve(mode, p_set=case.scheduled_injection(k).real)
            if mode.kind == CURRENT_CONSTRAINED
            else mode
            for k, mode in self.modes.items()
        }
        return evolve(self, modes=modes)

    @property
    def row(self) -> TableRow:
        return {'Slack': self.slack_id, 'U': self.u_buses, 'C': self.c_buses}

    def __str__(self) -> str:
        modes = ', '.join(f'{k}: {mode}' for k, mode in self.modes.items())
        return f'slack {self.slack_id}; {modes}'
