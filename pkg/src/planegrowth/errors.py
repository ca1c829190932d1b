"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: ValidationError -> 2,
NumericError -> 3, InfeasibleError -> 4.
"""


class PlaneGrowthError(Exception):
    """Base class for all package errors."""


class ValidationError(PlaneGrowthError):
    """Bad input: schema violations, broken preconditions, malformed data."""


class NumericError(PlaneGrowthError):
    """A numeric procedure failed: unreliable quadrature, non-convergence."""


class InfeasibleError(PlaneGrowthError):
    """The requested object cannot exist or cannot be constructed."""
