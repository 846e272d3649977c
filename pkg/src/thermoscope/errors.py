"""Error hierarchy shared by the numerical modules and the CLI.

Every error carries a short machine-readable ``kind`` that the CLI prints as
``error: <kind>: <detail>``.
"""


class ThermoscopeError(Exception):
    """Base class for all domain and solver failures."""

    kind = "error"

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail

    def format_line(self) -> str:
        """Single-line, machine-parsable rendering used on stderr."""
        return f"error: {self.kind}: {self.detail}"


class DimensionError(ThermoscopeError):
    kind = "dimension"


class NormalizationError(ThermoscopeError):
    kind = "normalization"


class EmptyDensityError(ThermoscopeError):
    kind = "empty-density"


class PreconditionError(ThermoscopeError):
    kind = "precondition"


class InputError(ThermoscopeError):
    kind = "input"


class InfeasibleTargetError(ThermoscopeError):
    kind = "infeasible-target"


class DegenerateSystemError(ThermoscopeError):
    kind = "degenerate-system"


class DomainError(ThermoscopeError):
    kind = "domain"


class NoCriticalPointError(ThermoscopeError):
    kind = "no-critical-point"


class NoCoexistenceError(ThermoscopeError):
    kind = "no-coexistence"


class AnchorError(ThermoscopeError):
    kind = "anchor"


class ConsistencyError(ThermoscopeError):
    kind = "consistency"


class GridError(ThermoscopeError):
    kind = "grid"


class DivergentIntegralError(DomainError):
    kind = "divergent-integral"
