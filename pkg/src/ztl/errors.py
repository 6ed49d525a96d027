"""Exception hierarchy shared by the ztl modules.

The CLI maps these onto its exit-code contract (precision failures exit 2,
data failures exit 3), so library code should raise the most specific class
that applies.
"""


class ZtlError(Exception):
    """Base class for all ztl errors."""


class DomainError(ZtlError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PoleError(DomainError):
    """Evaluation was requested exactly at a pole."""


class CapacityError(ZtlError):
    """A request exceeds a configured memory or size budget."""


class PrecisionError(ZtlError):
    """Floating-point cancellation or conditioning destroyed the result."""


class AccuracyError(ZtlError):
    """A numerical routine could not reach its accuracy target in budget."""


class DataError(ZtlError):
    """Input data is malformed, inconsistent, or insufficiently prepared."""
