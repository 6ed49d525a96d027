"""Phase-accurate oscillatory sums shared by the zero-sum kernels.

The explicit-formula terms oscillate as cos(gamma * log x) with arguments up
to ~2e7; reducing the phase mod 2*pi in 80-bit extended precision keeps the
delivered angles accurate to ~1e-12 rad where double precision alone would
drift three orders of magnitude worse.
"""

from __future__ import annotations

import numpy as np

_TWO_PI_LD = np.longdouble(2) * np.arccos(np.longdouble(-1))


def cos_sin_outer(u, v):
    """(cos, sin) of outer(u, v) with extended-precision phase reduction.

    u and v are real 1-d arrays; the result arrays have shape (len(u), len(v))
    and dtype float64.
    """
    ph = np.multiply.outer(
        np.asarray(u, dtype=np.longdouble), np.asarray(v, dtype=np.longdouble)
    )
    ph = np.mod(ph, _TWO_PI_LD).astype(np.float64)
    return np.cos(ph), np.sin(ph)


def cos_sin_product(u, v):
    """Elementwise (cos, sin) of u * v with extended-precision reduction."""
    ph = np.asarray(u, dtype=np.longdouble) * np.asarray(v, dtype=np.longdouble)
    ph = np.mod(ph, _TWO_PI_LD).astype(np.float64)
    return np.cos(ph), np.sin(ph)
