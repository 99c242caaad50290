from typing import Dict, List, Optional

import numpy as np

from pywirtinger.constants import (
    CW_ROW,
    CW_VARIANTS,
    TANGENT_KAPPA,
    TANGENT_ZERO,
    TANGENT_ZETA,
    TableRow,
)
from pywirtinger.models import BaseModel, define_array_model, define_model, field, is_in

TANGENT_KINDS = [TANGENT_ZERO, TANGENT_KAPPA, TANGENT_ZETA]


@define_model
class TangentFactor(BaseModel):
    """Unit-modulus factor xi relating ``dI* = xi dI`` for perturbations that keep a constrained
    bus on its constant-|V| (kappa) or constant-|I| (zeta) locus. Zero at unconstrained buses.
    """

    value: complex = field(default=0j, converter=complex)
    kind: str = field(default=TANGENT_ZERO, validator=is_in(TANGENT_KINDS), options=TANGENT_KINDS)

    def __attrs_post_init__(self):
        if self.kind == TANGENT_ZERO and self.value != 0:
            raise ValueError(f'A zero tangent factor must have value 0, not {self.value}')
        if self.kind != TANGENT_ZERO and abs(abs(self.value) - 1) > 1e-12:
            raise ValueError(f'Tangent factor {self.value} is not unit-modulus')

    def __complex__(self) -> complex:
        return self.value


@define_array_model
class ReducedJacobian(BaseModel):
    """Reduced Wirtinger Jacobian, of order ``2 n_u + n_c``.

    Rows are ``[S_U; S_U*; P_C]`` and columns are ``[I_U; I_U*; I_C]``, where each constrained
    column is the merge ``col(I_j) + xi_j col(I_j*)`` of the full Jacobian.
    """

    matrix: np.ndarray = field(repr=False)
    n_u: int = field(default=0)
    n_c: int = field(default=0)
    bus_order: List[int] = field(factory=list)
    alpha: np.ndarray = field(factory=lambda: np.zeros(0, dtype=complex), repr=False)
    xi: np.ndarray = field(factory=lambda: np.zeros(0, dtype=complex), repr=False)

    @property
    def order(self) -> int:
        return self.matrix.shape[0]

    @property
    def row_labels(self) -> List[str]:
        u, c = self.bus_order[: self.n_u], self.bus_order[self.n_u :]
        return [f'S_{k}' for k in u] + [f'S*_{k}' for k in u] + [f'P_{k}' for k in c]

    @property
    def col_labels(self) -> List[str]:
        u, c = self.bus_order[: self.n_u], self.bus_order[self.n_u :]
        return [f'I_{k}' for k in u] + [f'I*_{k}' for k in u] + [f'I_{k}' for k in c]

    @property
    def pivot_columns(self) -> List[int]:
        """Column holding the dominant entry of each row: ``V_i`` (in the ``I_i*`` column) for an
        ``S_i`` row, ``V_i*`` (in the ``I_i`` column) for an ``S_i*`` row, and ``alpha* + xi alpha``
        on the diagonal of the ``P_C`` block. This is the diagonal of the matrix with its ``I_U``
        and ``I_U*`` column blocks exchanged, a permutation that preserves singularity.
        """
        n_u = self.n_u
        return (
            [n_u + r for r in range(n_u)]
            + [r for r in range(n_u)]
            + [2 * n_u + r for r in range(self.n_c)]
        )

    def row_bus(self, row: int) -> int:
        """Bus id that a row belongs to. Columns follow the same layout."""
        if row < 2 * self.n_u:
            return self.bus_order[row % self.n_u]
        return self.bus_order[self.n_u + row - 2 * self.n_u]


@define_array_model
class DominanceReport(BaseModel):
    """Strict row diagonal dominance margins of a reduced Jacobian, and per-bus C_W indices"""

    diagonal: np.ndarray = field(repr=False, doc='Pivot magnitude of each row')
    offdiag: np.ndarray = field(repr=False, doc='Sum of off-pivot magnitudes of each row')
    row_buses: List[int] = field(factory=list, doc='Bus id that each row belongs to')
    c_w: Dict[int, float] = field(factory=dict, doc='C_W index by bus; may be +inf')
    variant: str = field(default=CW_ROW, validator=is_in(CW_VARIANTS), options=CW_VARIANTS)
    monitored: List[int] = field(factory=list, doc='Buses that system C_W is taken over')

    @property
    def margins(self) -> np.ndarray:
        return self.diagonal - self.offdiag

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margins)) if len(self.margins) else float('inf')

    @property
    def dominant(self) -> bool:
        return bool(np.all(self.margins > 0))

    @property
    def watched_c_w(self) -> Dict[int, float]:
        """C_W at the monitored buses, or at every bus if none are monitored"""
        if not self.monitored:
            return self.c_w
        return {k: v for k, v in self.c_w.items() if k in self.monitored}

    @property
    def min_c_w(self) -> float:
        """Lowest C_W over every bus, monitored or not"""
        return min(self.c_w.values()) if self.c_w else float('inf')

    @property
    def system_c_w(self) -> float:
        c_w = self.watched_c_w
        return min(c_w.values()) if c_w else float('inf')

    @property
    def critical_bus(self) -> Optional[int]:
        """Monitored bus with the lowest C_W"""
        c_w = self.watched_c_w
        return min(c_w, key=lambda k: c_w[k]) if c_w else None

    @property
    def bus_margins(self) -> Dict[int, float]:
        """Smallest row margin at each bus"""
        margins: Dict[int, float] = {}
        for bus_id, margin in zip(self.row_buses, self.margins):
            margins[bus_id] = min(float(margin), margins.get(bus_id, float('inf')))
        return margins

    @property
    def row(self) -> TableRow:
        return {
            'Dominant': self.dominant,
            'Min margin': self.min_margin,
            'System C_W': self.system_c_w,
            'Critical bus': self.critical_bus,
        }
