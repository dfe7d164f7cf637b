"""Exception types shared across the package."""


class GradstyleError(Exception):
    """Base class for all errors raised by this package."""


class NumericError(GradstyleError):
    """Numeric failure: non-finite values or a solver that did not converge."""


class WeightFormatError(GradstyleError):
    """Malformed or truncated weight file."""
