"""Exception hierarchy shared across the package."""

import numpy as np


class NpgError(Exception):
    """Base class for all package errors."""


class PositiveDefinitenessError(NpgError, np.linalg.LinAlgError):
    """Raised when a Cholesky pivot is not strictly positive.

    ``index`` is the zero-based position of the failing pivot.
    """

    def __init__(self, index, pivot=None):
        self.index = index
        self.pivot = pivot
        msg = "matrix is not positive definite (pivot %d" % index
        if pivot is not None:
            msg += " = %.3g" % pivot
        super().__init__(msg + ")")


class ConstantColumnError(NpgError, ValueError):
    def __init__(self, column):
        self.column = column
        super().__init__("column %s is constant; ranks are undefined" % (column,))


class DomainError(NpgError, ValueError):
    pass


class DimensionMismatch(NpgError, ValueError):
    pass


class InvalidInput(NpgError, ValueError):
    pass


class SingularSubmatrix(NpgError, np.linalg.LinAlgError):
    pass


class NonpositiveResidual(NpgError, ArithmeticError):
    """Quadratic form in the neighborhood reconstruction is not positive."""


class PilotRequired(NpgError, ValueError):
    pass


class DegenerateGrid(NpgError, ValueError):
    pass


class NotPositiveDefinite(NpgError, ValueError):
    pass


class LPError(NpgError, ArithmeticError):
    """A linear program did not reach an optimal vertex."""

    def __init__(self, status, message=None):
        self.status = status
        super().__init__(message or "linear program ended with status %s" % status)


class NumericalFailure(NpgError, ArithmeticError):
    pass


class ConfigError(NpgError, ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        prefix = ""
        if line is not None:
            prefix += "line %d: " % line
        if field is not None:
            prefix += "field '%s': " % field
        super().__init__(prefix + message)


class DataError(NpgError, ValueError):
    pass
