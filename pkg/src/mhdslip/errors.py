"""Exception types. Each carries a machine-readable ``category`` used as the CLI exit status."""

from __future__ import annotations


class MHDError(Exception):
    category = "error"
    exit_code = 1


class ConfigError(MHDError, ValueError):
    """Invalid configuration. ``field`` names the offending entry."""

    category = "config"
    exit_code = 2

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class UsageError(MHDError, TypeError):
    category = "usage"
    exit_code = 3


class NumericalError(MHDError, ArithmeticError):
    category = "numerical"
    exit_code = 4

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class IncompatibleDataError(NumericalError):
    """Neumann data and source violate the solvability condition."""

    def __init__(self, message: str, defect: float, subproblem: str | None = None):
        super().__init__(message, residual=defect)
        self.defect = defect
        self.subproblem = subproblem


class BlowUpError(NumericalError):
    def __init__(self, message: str, t: float, step: int | None = None):
        super().__init__(message)
        self.t = t
        self.step = step


class StepSizeError(NumericalError):
    def __init__(self, message: str, dt: float, dt_max: float):
        super().__init__(message)
        self.dt = dt
        self.dt_max = dt_max


class GuardError(MHDError, ValueError):
    """Requested derivative order is not supported at this resolution."""

    category = "guard"
    exit_code = 5


class RecordError(MHDError, ValueError):
    category = "record"
    exit_code = 6
