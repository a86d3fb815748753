"""Exception types shared across the package."""


class GapspecError(Exception):
    """Base class for package errors."""


class ConfigError(GapspecError, ValueError):
    """Invalid user configuration (bad coefficients, sizes, flags)."""


class DomainError(GapspecError, ValueError):
    """Requested frequency or branch lies outside the admissible domain."""


class EigenSolverError(GapspecError, RuntimeError):
    """Dense eigensolver failed to converge or returned poor residuals."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
