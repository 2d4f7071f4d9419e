"""Exception hierarchy shared by all resonlab engines."""


class ResonlabError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(ResonlabError):
    """Lattice vectors of incompatible or unsupported dimension."""


class ArityError(ResonlabError):
    """An interaction tuple or field list has the wrong length."""


class UnsupportedCaseError(ResonlabError):
    """The requested (d, k) combination is outside the supported range."""


class ParameterError(ResonlabError):
    """A numeric parameter is outside its admissible range."""


class PreconditionError(ResonlabError):
    """An operation-specific precondition is violated."""


class QueryError(ResonlabError):
    """A counting query is under-specified (no radius bounds the scan)."""


class DegenerateInputError(ResonlabError):
    """A ratio is requested against a vanishing denominator."""


class BudgetError(ResonlabError):
    """An enumeration would exceed the configured size budget."""


class DivergenceError(ResonlabError):
    """The time integration produced a non-finite state."""

    def __init__(self, message, step_index):
        super().__init__(message)
        self.step_index = step_index


class ConfigError(ResonlabError):
    """A run configuration could not be parsed or validated."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number
