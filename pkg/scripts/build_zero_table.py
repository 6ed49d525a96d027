#!/usr/bin/env python3
"""Regenerate the bundled table of critical-line zero heights.

Locates every zero with 0 < gamma < 2050 by Hardy-Z sign scanning plus
bisection (tolerance 1e-9), validates the first entries against well-known
published heights and the count against the smooth counting main term, and
writes src/ztl/data/zeros_2050.txt.

Usage: python scripts/build_zero_table.py [t_max]
"""

import math
import sys
import time
from pathlib import Path

import numpy as np

from ztl.zeros import zero_count_main_term
from ztl.zeta import locate_zeros

# First ten zeros to 12 decimals, as published in standard references.
KNOWN_FIRST = [
    14.134725141735,
    21.022039638772,
    25.010857580146,
    30.424876125860,
    32.935061587739,
    37.586178158826,
    40.918719012148,
    43.327073280915,
    48.005150881167,
    49.773832477672,
]


def main() -> int:
    t_max = float(sys.argv[1]) if len(sys.argv) > 1 else 2050.0
    out = Path(__file__).resolve().parents[1] / "src" / "ztl" / "data" / "zeros_2050.txt"

    start = time.time()
    zeros = locate_zeros(0.0, t_max)
    elapsed = time.time() - start
    print(f"located {zeros.size} zeros below {t_max:g} in {elapsed:.1f}s")

    for got, want in zip(zeros, KNOWN_FIRST):
        if abs(got - want) > 1e-8:
            raise SystemExit(f"mismatch vs published height: {got!r} vs {want!r}")
    main_term = zero_count_main_term(t_max)
    if abs(zeros.size - main_term) > 2.0 * math.log(t_max) + 5.0:
        raise SystemExit(
            f"count {zeros.size} too far from main term {main_term:.2f}"
        )

    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# Heights of the nontrivial zeta zeros on the critical line,\n")
        fh.write(f"# 0 < gamma < {t_max:g}, located by Hardy-Z bisection to 1e-9.\n")
        for g in zeros:
            fh.write(f"{g:.12f}\n")
    print(f"wrote {out} ({zeros.size} heights, max {zeros[-1]:.6f})")
    print(f"gap stats: min {np.min(np.diff(zeros)):.4f}, mean {np.mean(np.diff(zeros)):.4f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
