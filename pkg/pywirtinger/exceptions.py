from typing import Any, List, Optional


class WirtingerError(Exception):
    """Base class for all errors raised by this package"""


# Case input
# --------------------


class CaseError(WirtingerError, ValueError):
    """A case file could not be turned into a valid network"""


class CaseSyntaxError(CaseError):
    """A case file is not well formed in its declared format"""

    def __init__(self, message: str, position: int = None, token: str = None):
        self.position = position
        self.token = token
        location = f' at position {position}' if position is not None else ''
        near = f' near {token!r}' if token else ''
        super().__init__(f'{message}{location}{near}')


class CaseSemanticError(CaseError):
    """A case file parsed correctly, but describes an invalid network (duplicate bus, dangling
    branch, zero-impedance branch, missing slack, etc.)
    """


# Linear algebra
# --------------------


class SingularMatrix(WirtingerError, ArithmeticError):
    """A pivot fell below the relative singularity tolerance during LU factorization"""


class NoConvergence(WirtingerError, ArithmeticError):
    """An SVD or eigenvalue iteration did not converge"""


class DimensionMismatch(WirtingerError, ValueError):
    pass


class SingularReducedAdmittance(SingularMatrix):
    """The admittance matrix with the slack bus removed is singular, usually because part of the
    network is islanded from the slack bus
    """


# Power flow
# --------------------


class DidNotConverge(WirtingerError):
    """Newton iteration stopped at the iteration cap without meeting the mismatch tolerance.
    The last iterate and the per-iteration mismatch trace are kept for diagnostics.
    """

    def __init__(self, message: str, state: Any = None, trace: Optional[List[float]] = None):
        self.state = state
        self.trace = trace or []
        super().__init__(message)


class SingularJacobianAtIterate(DidNotConverge):
    """The conventional Jacobian became singular at a Newton iterate"""


class ModeOscillation(WirtingerError):
    """Converter mode switching did not settle within the outer iteration cap"""


# Wirtinger analysis
# --------------------


class DegenerateInput(WirtingerError, ValueError):
    """A tangent factor is undefined (zero voltage, current, or self-impedance)"""

    def __init__(self, message: str, bus: int = None):
        self.bus = bus
        super().__init__(f'{message} (bus {bus})' if bus is not None else message)


class SingularLoadBlock(SingularMatrix):
    """The load-bus block of the admittance matrix used by the L-index is singular"""


class InvalidBracket(WirtingerError, ValueError):
    """A boundary predicate has the same state at both ends of a bisection bracket"""


class SingularColumnMap(WirtingerError, ArithmeticError):
    """The current/state column map is singular at this operating point (e.g., zero voltage)"""
