"""Exception types shared across the package."""


class ShiftAddError(Exception):
    """Base class for all package errors."""


class DimensionError(ShiftAddError):
    """Operands have incompatible or invalid shapes."""


class ContractError(ShiftAddError):
    """An input violates a documented precondition (non-finite data, bad range)."""


class SolverError(ShiftAddError):
    """An iterative solver exhausted its budget without converging."""


class SingularMatrixError(ShiftAddError):
    """A matrix required to be invertible is (numerically) singular."""


class ChainFormatError(ShiftAddError):
    """A transform file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(ShiftAddError):
    """An experiment configuration is invalid."""
