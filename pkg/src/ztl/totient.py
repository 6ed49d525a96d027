"""Totient sieve, Riesz-smoothed summatory functions and their error terms.

Core quantities, for k >= 1 and real x >= 1:

* ``F(x)``: sum of phi(n) over n <= x (exact integer arithmetic).
* ``F_{k-1}(x) = (1/(k-1)!) * sum_{n<=x} phi(n) * log(x/n)^(k-1)``, the
  (k-1)-fold logarithmically smoothed summatory function.
* ``R_{k-1}(x) = F_{k-1}(x) - 3 x^2 / (2^(k-1) pi^2)``, the smoothed error
  term, and its normalization ``exp(-y/2) * R_{k-1}(exp(y))``.

The sieve stores phi as uint32 and the prefix sums as int64, both exact.
Smoothed sums track a rounding estimate because R is the difference of two
quantities of size ~x^2 while the signal is ~sqrt(x); ``PrecisionMode``
selects plain pairwise summation, exactly-rounded compensated summation
(math.fsum), or an mpmath sweep at 35 significant digits.

For x beyond any reasonable in-memory table,
:func:`smoothed_errors_streaming` evaluates R_{k-1} for a batch of targets
with a segmented sieve that never materializes the full phi array.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import CapacityError, DomainError, PrecisionError

_EPS = float(np.finfo(np.float64).eps)

#: Hard cap from the sieve contract.
N_MAX_LIMIT = 2**31

#: Default working-memory budget for sieve construction (bytes).
DEFAULT_MEMORY_BUDGET = 6 * 1024**3

#: Extended-precision sweeps are O(x) mpmath operations; refuse silly sizes.
EXTENDED_X_CAP = 2_000_000

MIN_K, MAX_K = 2, 8


class PrecisionMode(str, Enum):
    STANDARD = "standard"
    COMPENSATED = "compensated"
    EXTENDED = "extended"


@dataclass(frozen=True)
class TotientTable:
    """Sieved phi values and exact prefix sums up to n_max.

    phi[0] is unused padding; phi[n] = phi(n) for 1 <= n <= n_max and
    prefix[n] = F(n) as an exact int64.
    """

    n_max: int
    phi: np.ndarray
    prefix: np.ndarray

    def __post_init__(self):
        if self.phi.shape != (self.n_max + 1,) or self.prefix.shape != (self.n_max + 1,):
            raise DomainError("phi/prefix arrays must have length n_max + 1")


@dataclass(frozen=True)
class RieszMeanRequest:
    """Order k (mean order k-1), cutoff x and the summation precision mode."""

    k: int
    x: float
    precision_mode: PrecisionMode = PrecisionMode.COMPENSATED

    def __post_init__(self):
        if self.k < 1:
            raise DomainError("k must be >= 1")
        if self.x < 1.0:
            raise DomainError("x must be >= 1")


@dataclass(frozen=True)
class ErrorTermValue:
    """R_{k-1}(x) together with the main-term split and a rounding bound."""

    x: float
    k: int
    F_value: float
    main_term: float
    R_value: float
    est_rounding: float

    @property
    def admissible(self) -> bool:
        """True when the rounding estimate leaves the sign of R trustworthy."""
        return self.est_rounding < abs(self.R_value)


def _primes_upto(limit: int) -> np.ndarray:
    """Primes <= limit via a boolean Eratosthenes sieve."""
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_p[p]:
            is_p[p * p :: p] = False
    return np.nonzero(is_p)[0].astype(np.int64)


def _phi_block(lo: int, hi: int, primes: np.ndarray) -> np.ndarray:
    """phi(n) for n in [lo, hi) given all primes <= sqrt(hi - 1).

    Multiplicative sieve: divide out each prime factor p <= sqrt once via
    phi -> phi - phi/p, track the unfactored remainder, and finish with the
    at-most-one prime factor above the root.
    """
    n = np.arange(lo, hi, dtype=np.int64)
    phi = n.copy()
    rem = n.copy()
    if lo == 0:
        phi[0] = 0
        rem[0] = 1
    for p in primes:
        p = int(p)
        if p * p >= hi:
            break
        start = ((lo + p - 1) // p) * p
        if start >= hi:
            continue
        sl = slice(start - lo, hi - lo, p)
        phi[sl] -= phi[sl] // p
        q = p
        while q < hi:
            s2 = ((lo + q - 1) // q) * q
            if s2 < hi:
                rem[s2 - lo :: q] //= p
            q *= p
    big = rem > 1
    if np.any(big):
        phi[big] = phi[big] // rem[big] * (rem[big] - 1)
    return phi


def sieve_totients(n_max: int, memory_budget: int = DEFAULT_MEMORY_BUDGET) -> TotientTable:
    """Sieve phi(1..n_max) and its exact prefix sums.

    Working set is ~16 bytes per n during construction plus 12 bytes per n
    stored; a CapacityError is raised when that exceeds ``memory_budget`` or
    when n_max exceeds the 2^31 contract cap.
    """
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    if n_max > N_MAX_LIMIT:
        raise CapacityError(f"n_max {n_max} exceeds the 2^31 sieve cap")
    need = 28 * (n_max + 1)
    if need > memory_budget:
        raise CapacityError(
            f"sieve of {n_max} needs ~{need} bytes, budget is {memory_budget}"
        )
    primes = _primes_upto(math.isqrt(n_max))
    phi64 = _phi_block(0, n_max + 1, primes)
    prefix = np.cumsum(phi64, dtype=np.int64)
    phi = phi64.astype(np.uint32)
    return TotientTable(n_max=n_max, phi=phi, prefix=prefix)


def _check_x(table: TotientTable, x: float, lo: float = 1.0):
    if not (lo <= x <= table.n_max):
        raise DomainError(f"x = {x:g} outside [{lo:g}, n_max = {table.n_max}]")


def summatory_totient(table: TotientTable, x: float) -> int:
    """F(x) as an exact integer (floor semantics in the cutoff)."""
    _check_x(table, x)
    return int(table.prefix[int(math.floor(x))])


def _riesz_terms(table: TotientTable, k: int, x: float):
    """Float64 term array phi(n) * log(x/n)^(k-1) / (k-1)! for n <= x."""
    m = int(math.floor(x))
    n = np.arange(1, m + 1, dtype=np.float64)
    log_ratio = math.log(x) - np.log(n)
    w = table.phi[1 : m + 1].astype(np.float64)
    return w * log_ratio ** (k - 1) / math.gamma(k)


def _riesz_extended(table: TotientTable, k: int, x: float) -> float:
    import mpmath as mp

    if x > EXTENDED_X_CAP:
        raise CapacityError(
            f"extended mode sweeps every n <= x in software floats; x = {x:g} "
            f"exceeds the {EXTENDED_X_CAP} cap"
        )
    m = int(math.floor(x))
    with mp.workdps(35):
        lx = mp.log(x)
        acc = mp.mpf(0)
        phi = table.phi
        for n in range(1, m + 1):
            acc += int(phi[n]) * (lx - mp.log(n)) ** (k - 1)
        return float(acc / mp.factorial(k - 1))


def _riesz_with_error(table: TotientTable, k: int, x: float, mode: PrecisionMode):
    """(F_{k-1}(x), rounding estimate) under the requested mode.

    The estimate covers per-term log/power roundoff plus the reduction: the
    log-argument scale multiplies the lower-order absolute sum, so the bound
    has shape eps * (sum |terms| + log(x) * sum |lower terms|).
    """
    if k == 1:
        return float(summatory_totient(table, x)), 0.0
    if mode is PrecisionMode.EXTENDED:
        return _riesz_extended(table, k, x), 0.0
    terms = _riesz_terms(table, k, x)
    abs_sum = float(np.sum(np.abs(terms)))
    if k >= 3:
        lower = _riesz_terms(table, k - 1, x)
        lower_abs = float(np.sum(np.abs(lower)))
    else:
        lower_abs = float(summatory_totient(table, x))
    term_noise = _EPS * (abs_sum + 2.0 * math.log(max(x, 2.0)) * lower_abs)
    if mode is PrecisionMode.COMPENSATED:
        value = math.fsum(terms)
        est = 2.0 * _EPS * abs_sum + term_noise
    else:
        value = float(np.sum(terms))
        est = (math.log2(max(terms.size, 2)) + 2.0) * _EPS * abs_sum + term_noise
    return value, est


def riesz_mean(table: TotientTable, req: RieszMeanRequest) -> float:
    """F_{k-1}(x) = (1/(k-1)!) sum_{n<=x} phi(n) log(x/n)^(k-1).

    For k = 1 this is exactly the integer summatory function.  A precision
    warning fires when the rounding estimate exceeds sqrt(x), the scale at
    which the smoothed error term lives.
    """
    _check_x(table, req.x)
    value, est = _riesz_with_error(table, req.k, req.x, req.precision_mode)
    if est > math.sqrt(req.x):
        warnings.warn(
            f"riesz_mean rounding estimate {est:.3g} exceeds sqrt(x); "
            "the cancellation regime needs a stronger precision mode",
            RuntimeWarning,
            stacklevel=2,
        )
    return value


def main_term(k: int, x: float) -> float:
    """3 x^2 / (2^(k-1) pi^2)."""
    return 3.0 * x * x / (2.0 ** (k - 1) * math.pi**2)


def smoothed_error(
    table: TotientTable,
    k: int,
    x: float,
    mode: PrecisionMode = PrecisionMode.COMPENSATED,
    strict: bool = True,
) -> ErrorTermValue:
    """R_{k-1}(x) = F_{k-1}(x) - 3x^2/(2^(k-1) pi^2) with rounding ledger.

    With ``strict`` a PrecisionError is raised when the rounding estimate
    swamps the computed R (the subtraction lost all signal); pipelines that
    only need R to a stated absolute envelope can pass strict=False and
    consult ``admissible`` themselves.
    """
    if not MIN_K <= k <= MAX_K:
        raise DomainError(f"k must lie in [{MIN_K}, {MAX_K}]")
    _check_x(table, x, lo=2.0)
    f_value, est = _riesz_with_error(table, k, x, mode)
    main = main_term(k, x)
    r_value = f_value - main
    est_total = est + 2.0 * _EPS * abs(main)
    result = ErrorTermValue(
        x=x, k=k, F_value=f_value, main_term=main, R_value=r_value, est_rounding=est_total
    )
    if strict and r_value != 0.0 and not result.admissible:
        raise PrecisionError(
            f"R_{k-1}({x:g}) = {r_value:.6g} is below the rounding estimate "
            f"{est_total:.6g}; use extended precision"
        )
    return result


def normalized_error_direct(
    table: TotientTable,
    k: int,
    y: float,
    mode: PrecisionMode = PrecisionMode.COMPENSATED,
    strict: bool = True,
) -> float:
    """exp(-y/2) * R_{k-1}(exp(y)) by direct summation (exp(y) <= n_max)."""
    x = math.exp(y)
    if x < 2.0:
        raise DomainError("normalized error needs exp(y) >= 2")
    if x > table.n_max:
        raise DomainError(
            f"exp(y) = {x:g} exceeds the sieve capacity {table.n_max}; "
            "large y is served by the zero-sum route"
        )
    err = smoothed_error(table, k, x, mode=mode, strict=strict)
    return math.exp(-0.5 * y) * err.R_value


# ---------------------------------------------------------------------------
# Segmented evaluation for x far beyond any in-memory table.
# ---------------------------------------------------------------------------


def riesz_means_streaming_multi(
    xs, k_values, block_size: int = 1 << 22
) -> dict[int, np.ndarray]:
    """F_{k-1} at each x in xs for several k in one segmented sieve pass.

    Memory is O(block_size) and the phi blocks are shared across all k; the
    per-target partial block sums are reduced with exactly-rounded summation
    at the end, so the result matches the compensated table path to its
    rounding estimate.
    """
    xs = np.asarray(xs, dtype=np.float64)
    k_values = sorted(set(int(k) for k in k_values))
    if any(k < 1 for k in k_values):
        raise DomainError("k must be >= 1")
    if xs.size == 0:
        return {k: np.empty(0) for k in k_values}
    if np.any(xs < 1.0):
        raise DomainError("riesz_means_streaming needs every x >= 1")
    top = int(math.floor(float(np.max(xs))))
    primes = _primes_upto(math.isqrt(top))
    log_x = np.log(xs)
    cutoffs = np.floor(xs).astype(np.int64)
    partials: dict[int, list[list[float]]] = {
        k: [[] for _ in range(xs.size)] for k in k_values
    }
    for lo in range(1, top + 1, block_size):
        hi = min(top + 1, lo + block_size)
        phi = _phi_block(lo, hi, primes).astype(np.float64)
        ln_n = np.log(np.arange(lo, hi, dtype=np.float64))
        for j in range(xs.size):
            m = int(cutoffs[j])
            if m < lo:
                continue
            stop = min(hi, m + 1) - lo
            log_ratio = log_x[j] - ln_n[:stop]
            for k in k_values:
                if k == 1:
                    partials[k][j].append(float(np.sum(phi[:stop])))
                else:
                    terms = phi[:stop] * log_ratio ** (k - 1)
                    partials[k][j].append(float(np.sum(terms)))
    return {
        k: np.array([math.fsum(p) / math.gamma(k) for p in partials[k]])
        for k in k_values
    }


def riesz_means_streaming(xs, k: int, block_size: int = 1 << 22) -> np.ndarray:
    """F_{k-1} at each x in xs via a segmented sieve (no full phi table)."""
    return riesz_means_streaming_multi(xs, (k,), block_size=block_size)[int(k)]


def smoothed_errors_streaming_multi(
    xs, k_values, block_size: int = 1 << 22
) -> dict[int, np.ndarray]:
    """R_{k-1} at each x in xs for several k sharing one sieve pass."""
    for k in k_values:
        if not MIN_K <= int(k) <= MAX_K:
            raise DomainError(f"k must lie in [{MIN_K}, {MAX_K}]")
    xs = np.asarray(xs, dtype=np.float64)
    if np.any(xs < 2.0):
        raise DomainError("smoothed errors need x >= 2")
    f_vals = riesz_means_streaming_multi(xs, k_values, block_size=block_size)
    return {
        k: f - 3.0 * xs * xs / (2.0**(k - 1) * math.pi**2)
        for k, f in f_vals.items()
    }


def smoothed_errors_streaming(xs, k: int, block_size: int = 1 << 22) -> np.ndarray:
    """R_{k-1} at each x in xs via the segmented route."""
    return smoothed_errors_streaming_multi(xs, (k,), block_size=block_size)[int(k)]


# ---------------------------------------------------------------------------
# Binary sieve cache: little-endian u64 n_max header, then u32 phi values.
# ---------------------------------------------------------------------------


def save_sieve_cache(table: TotientTable, path) -> None:
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", table.n_max))
        fh.write(table.phi[1:].astype("<u4").tobytes())


def load_sieve_cache(path) -> TotientTable:
    with open(path, "rb") as fh:
        header = fh.read(8)
        if len(header) != 8:
            raise DomainError(f"sieve cache {path} is truncated")
        n_max = struct.unpack("<Q", header)[0]
        raw = np.frombuffer(fh.read(), dtype="<u4")
    if raw.size != n_max:
        raise DomainError(
            f"sieve cache {path} holds {raw.size} values, header says {n_max}"
        )
    phi = np.empty(n_max + 1, dtype=np.uint32)
    phi[0] = 0
    phi[1:] = raw
    prefix = np.cumsum(phi, dtype=np.int64)
    return TotientTable(n_max=int(n_max), phi=phi, prefix=prefix)
