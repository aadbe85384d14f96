"""Exception types shared across the package."""


class FuncregError(Exception):
    """Base class for all errors raised by funcreg."""


class GridMismatchError(FuncregError, ValueError):
    """Operands are defined on different grids (or wrong lengths)."""


class InsufficientDataError(FuncregError, ValueError):
    """Too few curves or points for the requested operation."""


class DegenerateDataError(FuncregError, ValueError):
    """Input has no usable variation (constant sample, zero distances, ...)."""


class IllConditionedError(FuncregError, RuntimeError):
    """A linear system is numerically singular beyond the allowed threshold."""


class NotPositiveSemidefiniteError(FuncregError, RuntimeError):
    """A covariance matrix could not be factorized even after jitter."""


class UnsupportedModelError(FuncregError, ValueError):
    """The operation is not defined for this model configuration."""


class FileFormatError(FuncregError, ValueError):
    """A CSV/JSON artifact does not follow the documented layout."""


class ValidationError(FuncregError, ValueError):
    """One or more invalid configuration fields, reported together."""

    def __init__(self, messages):
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))
