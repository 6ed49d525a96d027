"""ztl: smoothed summatory-totient error terms and their zero-side story.

The package sieves Euler's totient and its logarithmically smoothed
summatory functions, evaluates the Riemann zeta function and its zeros,
rebuilds the smoothed error terms from truncated sums over those zeros
(with explicit error envelopes), and reproduces the limiting value
distribution of the normalized error together with its Bessel-product
characteristic function and tail diagnostics.
"""

from .errors import (
    AccuracyError,
    CapacityError,
    DataError,
    DomainError,
    PoleError,
    PrecisionError,
    ZtlError,
)
from .zeros import bundled_zero_table_path

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "CapacityError",
    "DataError",
    "DomainError",
    "PoleError",
    "PrecisionError",
    "ZtlError",
    "bundled_zero_table_path",
    "__version__",
]
