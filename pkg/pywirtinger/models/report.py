"""Analysis results: index vectors, sweep samples, boundaries, equivalence checks, and the
report document rendered by the CLI
"""
from typing import Dict, List, Optional

from pywirtinger.constants import (
    BOUNDARY_PREDICATES,
    CONV_SINGULAR,
    CSV_COLUMNS,
    EQUIVALENCE_TOLERANCE,
    KR_INDEX,
    L_INDEX,
    MIN_COLUMN_MAP_SINGULAR_VALUE,
    SCR_INDEX,
    Bracket,
    JsonDict,
    OptionalFloat,
    TableRow,
)
from pywirtinger.converters import to_json_number
from pywirtinger.models import BaseModel, define_model, field, is_in
from pywirtinger.models.jacobian import DominanceReport
from pywirtinger.models.state import OperatingPoint

INDEX_KINDS = [L_INDEX, SCR_INDEX, KR_INDEX]


@define_model
class IndexVector(BaseModel):
    """Values of one stability index by bus. ``None`` means the index is undefined at that bus."""

    kind: str = field(validator=is_in(INDEX_KINDS), options=INDEX_KINDS)
    values: Dict[int, OptionalFloat] = field(factory=dict)

    def get(self, bus_id: int) -> OptionalFloat:
        return self.values.get(bus_id)

    @property
    def present(self) -> Dict[int, float]:
        return {k: v for k, v in self.values.items() if v is not None}

    @property
    def max_value(self) -> OptionalFloat:
        return max(self.present.values()) if self.present else None

    @property
    def min_value(self) -> OptionalFloat:
        return min(self.present.values()) if self.present else None

    def __str__(self) -> str:
        return f'{self.kind}: {len(self.present)}/{len(self.values)} buses defined'


@define_model
class Boundary(BaseModel):
    """A loading level located by bisection, where a stability predicate changes state"""

    predicate: str = field(validator=is_in(BOUNDARY_PREDICATES), options=BOUNDARY_PREDICATES)
    lambda_star: float = field(doc='Bisected loading level (bracket midpoint)')
    tolerance: float = field(doc='Final bracket width')
    bracket: Bracket = field(default=(0.0, 0.0), converter=tuple, doc='Final (lo, hi) bracket')
    solves: int = field(default=0, doc='Number of solves performed')

    @property
    def row(self) -> TableRow:
        return {
            'Boundary': self.predicate,
            'Lambda': self.lambda_star,
            'Tolerance': self.tolerance,
            'Solves': self.solves,
        }

    def __str__(self) -> str:
        return f'{self.predicate}: lambda* = {self.lambda_star:.6g} +/- {self.tolerance:.1g}'


@define_model
class ModeTransition(BaseModel):
    """A converter switching from voltage regulation to its current limit during a sweep"""

    lambda_value: float = field(doc='First loading level at which the switch occurred')
    bus: int = field()
    from_mode: str = field()
    to_mode: str = field()

    @property
    def row(self) -> TableRow:
        return {
            'Lambda': self.lambda_value,
            'Bus': self.bus,
            'From': self.from_mode,
            'To': self.to_mode,
        }

    def __str__(self) -> str:
        return f'lambda={self.lambda_value:g}: bus {self.bus} {self.from_mode} -> {self.to_mode}'


@define_model
class SweepSample(BaseModel):
    """Evaluation of one loading level. Samples that failed to converge carry only diagnostics."""

    lambda_value: float = field()
    converged: bool = field(default=False)
    point: Optional[OperatingPoint] = field(default=None, repr=False)
    dominance: Optional[DominanceReport] = field(default=None, repr=False)
    indices: Dict[str, 'IndexVector'] = field(factory=dict, repr=False)
    sigma_min_conv: OptionalFloat = field(default=None, doc='Smallest singular value of J_conv')
    conv_singular: bool = field(default=False, doc='Whether J_conv counts as singular')
    modes: Dict[int, str] = field(factory=dict, doc='Bus id -> mode label (U, CV, CI)')
    diagnostics: str = field(default='', doc='Failure description for unconverged samples')

    @property
    def dominant(self) -> Optional[bool]:
        return self.dominance.dominant if self.dominance else None

    @property
    def system_c_w(self) -> OptionalFloat:
        return self.dominance.system_c_w if self.dominance else None

    @property
    def critical_bus(self) -> Optional[int]:
        return self.dominance.critical_bus if self.dominance else None

    def index_value(self, kind: str, bus_id: int) -> OptionalFloat:
        vector = self.indices.get(kind)
        return vector.get(bus_id) if vector else None

    def bus_rows(self) -> List['BusReportRow']:
        """Per-bus report rows, in bus order"""
        if not self.converged or self.point is None:
            return []
        margins = self.dominance.bus_margins if self.dominance else {}
        c_w = self.dominance.c_w if self.dominance else {}
        return [
            BusReportRow(
                lambda_value=self.lambda_value,
                bus=bus_id,
                mode=self.modes.get(bus_id, ''),
                c_w=c_w.get(bus_id),
                k_r=self.index_value(KR_INDEX, bus_id),
                l_index=self.index_value(L_INDEX, bus_id),
                scr=self.index_value(SCR_INDEX, bus_id),
                margin=margins.get(bus_id),
                sigma_min_conv=self.sigma_min_conv,
            )
            for bus_id in self.point.bus_order
        ]

    @property
    def row(self) -> TableRow:
        return {
            'Lambda': self.lambda_value,
            'Converged': self.converged,
            'Dominant': self.dominant,
            'System C_W': self.system_c_w,
            'sigma_min(J_conv)': self.sigma_min_conv,
        }


@define_model
class SweepResult(BaseModel):
    """Samples of a loading sweep in ascending order, with located boundaries and mode switches"""

    samples: List[SweepSample] = field(factory=list)
    boundaries: Dict[str, Boundary] = field(factory=dict)
    transitions: List[ModeTransition] = field(factory=list)

    @property
    def lambdas(self) -> List[float]:
        return [s.lambda_value for s in self.samples]

    @property
    def converged_samples(self) -> List[SweepSample]:
        return [s for s in self.samples if s.converged]

    @property
    def last_converged(self) -> Optional[SweepSample]:
        converged = self.converged_samples
        return converged[-1] if converged else None

    def bus_rows(self) -> List['BusReportRow']:
        return [row for sample in self.samples for row in sample.bus_rows()]

    def margins_to_singularity(self) -> Dict[str, float]:
        """Get how far below the conventional Jacobian singularity each other boundary lies, as a
        percentage of the singular loading level
        """
        conv = self.boundaries.get(CONV_SINGULAR)
        if conv is None or conv.lambda_star <= 0:
            return {}
        return {
            k: 100 * (conv.lambda_star - boundary.lambda_star) / conv.lambda_star
            for k, boundary in self.boundaries.items()
            if k != CONV_SINGULAR
        }

    def __str__(self) -> str:
        return (
            f'{len(self.samples)} samples ({len(self.converged_samples)} converged), '
            f'{len(self.boundaries)} boundaries, {len(self.transitions)} transitions'
        )


@define_model
class EquivalenceReport(BaseModel):
    """Numerical check that the conventional Jacobian factors as ``L J_red R``.

    ``residual`` compares against the reduced Wirtinger Jacobian; ``chain_residual`` compares
    against the full Wirtinger Jacobian composed with the row drop and the full column map, which
    holds at every non-pathological point.
    """

    lambda_value: OptionalFloat = field(default=None)
    residual: float = field(default=float('inf'), doc='||J_conv - L J_red R||_F / ||J_conv||_F')
    chain_residual: float = field(default=float('inf'), doc='Same, via the full Jacobian')
    det_l_magnitude: float = field(default=0.0, doc='|det L|, which is 2^-n_u')
    r_min_singular: float = field(default=0.0, doc='Smallest singular value of R')
    current_limit_extension: bool = field(
        default=False, doc='Whether R was extended with tangent columns for current-limited buses'
    )
    n_u: int = field(default=0)
    n_c: int = field(default=0)
    note: str = field(default='')

    @property
    def verdict(self) -> bool:
        return bool(
            self.chain_residual <= EQUIVALENCE_TOLERANCE
            and self.r_min_singular >= MIN_COLUMN_MAP_SINGULAR_VALUE
        )

    @property
    def reduced_exact(self) -> bool:
        return self.residual <= EQUIVALENCE_TOLERANCE

    @property
    def row(self) -> TableRow:
        return {
            'Lambda': self.lambda_value,
            'Residual': self.residual,
            'Chain residual': self.chain_residual,
            '|det L|': self.det_l_magnitude,
            'sigma_min(R)': self.r_min_singular,
            'Verdict': 'pass' if self.verdict else 'FAIL',
        }

    def to_dict(self, **kwargs) -> JsonDict:
        data = super().to_dict(**kwargs)
        data['verdict'] = self.verdict
        return data


@define_model
class BusReportRow(BaseModel):
    """One bus at one loading level, as a report table or CSV row"""

    lambda_value: float = field()
    bus: int = field()
    mode: str = field(default='')
    c_w: OptionalFloat = field(default=None)
    k_r: OptionalFloat = field(default=None)
    l_index: OptionalFloat = field(default=None)
    scr: OptionalFloat = field(default=None)
    margin: OptionalFloat = field(default=None)
    sigma_min_conv: OptionalFloat = field(default=None)

    @property
    def row(self) -> TableRow:
        return {
            'Lambda': self.lambda_value,
            'Bus': self.bus,
            'Mode': self.mode,
            'C_W': self.c_w,
            'K_R': self.k_r,
            'L': self.l_index,
            'SCR': self.scr,
            'Margin': self.margin,
        }

    @property
    def csv_values(self) -> List:
        values = {
            'lambda': self.lambda_value,
            'bus': self.bus,
            'mode': self.mode,
            'c_w': self.c_w,
            'k_r': self.k_r,
            'l_index': self.l_index,
            'scr': self.scr,
            'margin': self.margin,
            'sigma_min_conv': self.sigma_min_conv,
        }
        return [values[k] for k in CSV_COLUMNS]


@define_model
class ReportDocument(BaseModel):
    """Everything a CLI command reports, in a fixed field order"""

    metadata: Dict[str, object] = field(factory=dict, doc='Case name, version, and options echo')
    rows: List[BusReportRow] = field(factory=list)
    boundaries: List[Boundary] = field(factory=list)
    transitions: List[ModeTransition] = field(factory=list)
    equivalence: List[EquivalenceReport] = field(factory=list)
    diagnostics: List[str] = field(factory=list)

    def to_dict(self, **kwargs) -> JsonDict:
        return {
            'metadata': {k: _json_value(v) for k, v in self.metadata.items()},
            'rows': [row.to_dict() for row in self.rows],
            'boundaries': [b.to_dict() for b in self.boundaries],
            'transitions': [t.to_dict() for t in self.transitions],
            'equivalence': [e.to_dict() for e in self.equivalence],
            'diagnostics': list(self.diagnostics),
        }


def _json_value(value):
    if isinstance(value, float):
        return to_json_number(value)
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    return value
