"""Exception types shared across the package.

The CLI maps ConfigError to exit code 1 and NumericalError to exit code 2.
"""


class AggrsimError(Exception):
    """Base class for all package errors."""


class ConfigError(AggrsimError):
    """Invalid configuration: unknown key, bad type, violated precondition."""


class NumericalError(AggrsimError):
    """A run failed at runtime for numerical reasons."""


class SolverError(NumericalError):
    """A linear solve did not meet the requested residual tolerance."""


class PositivityError(NumericalError):
    """A density developed negative values beyond the roundoff allowance."""


class CflError(NumericalError):
    """A transport step was requested with Courant number above 1."""


class DampingError(NumericalError):
    """Explicit damping update would overshoot (H*dt >= 1)."""
