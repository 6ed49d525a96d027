"""Limiting-distribution sampling, histograms, and characteristic functions.

The normalized error exp(-y/2) R_{k-1}(exp(y)) is sampled over large y
through its zero-side representation

    2 * sum_{0<gamma<T} Re[c_rho(k) exp(i gamma y)]  +  exp(-y/2) * corrections,

which is what makes y up to 1e4 (x = e^{10000}) reachable at all.  Histograms
of those samples are the empirical stand-in for the limiting measure; the
empirical characteristic function (1/n) sum exp(i t v_j) is compared against
the Bessel products

    prod_j  J(2 c_rho_j(k) t)          (complex argument, taken literally)
    prod_j  J0(2 |c_rho_j(k)| t)       (modulus variant)

where J is the even power series sum_r (-1)^r (z/2)^{2r} / (r!)^2.  Both
variants ship: the independent-phase heuristic for a sum of random-phase
cosines produces the modulus form, while the transform formula applies J
to the complex coefficient itself, and the two readings coincide only in
the leading order.  The comparisons key on the modulus variant and record
the other.

Tail diagnostics probe the boundedness split: partial sums of |c_rho(k)|
settle for k >= 3 (their increments collapse), while the k = 2 proxy
sum 1/(|zeta'(rho)| gamma) keeps growing.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import DataError, DomainError
from .explicit import CorrectionEvaluator, snap_to_midpoint, zero_sum_envelope
from .oscillation import cos_sin_outer
from .totient import MAX_K, MIN_K, smoothed_errors_streaming
from .zeros import ZeroTable, j_minus_one


class SampleMethod(str, Enum):
    DIRECT = "direct"
    ZERO_SUM = "zero_sum"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class HybridCheck:
    """Direct-vs-zero-sum overlap where the sieve can still reach e^y."""

    y: np.ndarray
    direct_values: np.ndarray
    zero_sum_values: np.ndarray
    envelopes: np.ndarray  # truncation envelope * exp(-y/2), pointwise

    @property
    def discrepancies(self) -> np.ndarray:
        return np.abs(self.direct_values - self.zero_sum_values)

    @property
    def max_discrepancy(self) -> float:
        return float(np.max(self.discrepancies)) if self.y.size else 0.0

    @property
    def within_envelope(self) -> bool:
        return bool(np.all(self.discrepancies <= self.envelopes))


@dataclass(frozen=True)
class DistributionSample:
    """y-grid of normalized error values with provenance."""

    k: int
    y_grid: np.ndarray
    values: np.ndarray
    method: SampleMethod
    T_used: float
    corrections_included: bool
    hybrid: HybridCheck | None = None

    def __post_init__(self):
        if np.any(np.diff(self.y_grid) <= 0):
            raise DomainError("y grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("sample values must be finite")


def _zero_route_values(
    table: ZeroTable,
    k: int,
    y: np.ndarray,
    t_req: float,
    evaluator: CorrectionEvaluator | None,
    include_corrections: bool,
) -> tuple[np.ndarray, float, int]:
    t_snap, n_used = snap_to_midpoint(table, t_req)
    vals = np.zeros_like(y)
    if n_used:
        g, c = table.coefficient_array(k, t_snap)
        chunk = max(1, 2_000_000 // max(1, g.size))
        for i in range(0, y.size, chunk):
            cos_ph, sin_ph = cos_sin_outer(y[i : i + chunk], g)
            vals[i : i + chunk] = 2.0 * (cos_ph @ c.real - sin_ph @ c.imag)
    if include_corrections:
        ev = evaluator or CorrectionEvaluator(k)
        if ev.k != k:
            raise DomainError(f"corrections evaluator is for k = {ev.k}, not {k}")
        vals = vals + np.exp(-0.5 * y) * ev.evaluate_log(y)
    return vals, t_snap, n_used


def sample_normalized(
    table: ZeroTable,
    k: int,
    y_min: float,
    y_max: float,
    step: float,
    t_req: float,
    include_corrections: bool = True,
    corrections_evaluator: CorrectionEvaluator | None = None,
    direct_capacity: float = 0.0,
    uniform_rng: np.random.Generator | None = None,
) -> DistributionSample:
    """Sample exp(-y/2) R_{k-1}(e^y) on a y-grid via the zero-sum route.

    The default grid is y_min, y_min + step, ...; passing ``uniform_rng``
    draws the same number of y values uniformly at random instead (guards
    against artifacts of a commensurate grid).  With ``direct_capacity`` > 0
    every y with e^y <= capacity is recomputed by segmented direct summation
    and the discrepancies are attached as a HybridCheck.
    """
    if not MIN_K <= k <= MAX_K:
        raise DomainError(f"k must lie in [{MIN_K}, {MAX_K}]")
    if step <= 0.0 or y_max < y_min:
        raise DomainError("need step > 0 and y_max >= y_min")
    if math.exp(y_min) < 2.0:
        raise DomainError("normalized error requires exp(y) >= 2")
    n_pts = int(math.floor((y_max - y_min) / step + 1e-9)) + 1
    if uniform_rng is not None:
        y = np.sort(uniform_rng.uniform(y_min, y_max, n_pts))
    else:
        y = y_min + step * np.arange(n_pts)

    vals, t_snap, _ = _zero_route_values(
        table, k, y, t_req, corrections_evaluator, include_corrections
    )

    hybrid = None
    method = SampleMethod.ZERO_SUM
    if direct_capacity > 0.0:
        sel = y <= math.log(direct_capacity)
        if np.any(sel):
            xs = np.exp(y[sel])
            direct = smoothed_errors_streaming(xs, k) * np.exp(-0.5 * y[sel])
            env = np.array(
                [zero_sum_envelope(k, float(x), t_snap) for x in xs]
            ) * np.exp(-0.5 * y[sel])
            hybrid = HybridCheck(
                y=y[sel],
                direct_values=direct,
                zero_sum_values=vals[sel],
                envelopes=env,
            )
            method = SampleMethod.HYBRID
    return DistributionSample(
        k=k,
        y_grid=y,
        values=vals,
        method=method,
        T_used=t_snap,
        corrections_included=include_corrections,
        hybrid=hybrid,
    )


# ---------------------------------------------------------------------------
# Histograms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HistogramSummary:
    bin_edges: np.ndarray
    counts: np.ndarray
    mean: float
    std: float
    skewness: float
    n: int


def build_histogram(sample: DistributionSample, n_bins: int) -> HistogramSummary:
    """Equal-width histogram over [min, max] plus exactly-rounded moments."""
    if n_bins < 10:
        raise DomainError("need at least 10 bins")
    v = sample.values
    if v.size == 0:
        raise DomainError("empty sample")
    vmin, vmax = float(np.min(v)), float(np.max(v))
    if vmin == vmax:
        raise DomainError("degenerate sample range: all values equal")
    counts, edges = np.histogram(v, bins=n_bins, range=(vmin, vmax))
    n = v.size
    mean = math.fsum(v) / n
    centered = v - mean
    m2 = math.fsum(centered * centered) / n
    m3 = math.fsum(centered**3) / n
    std = math.sqrt(m2)
    skew = m3 / m2**1.5 if m2 > 0 else 0.0
    return HistogramSummary(
        bin_edges=edges, counts=counts, mean=mean, std=std, skewness=skew, n=n
    )


def count_modes(counts, smooth_window: int = 7, min_height_frac: float = 0.1) -> int:
    """Number of modes of a histogram after moving-average smoothing.

    Plateaus merge into one mode; maxima below min_height_frac of the global
    peak are ignored (Poisson noise in sparse tails).
    """
    c = np.asarray(counts, dtype=np.float64)
    w = max(1, int(smooth_window))
    # Unnormalized window sums stay exact for integer counts, so plateaus
    # compare equal instead of wobbling by an ulp.
    smooth = np.convolve(c, np.ones(w), mode="same")
    floor = min_height_frac * float(np.max(smooth))
    modes = 0
    rising = True
    for i in range(1, smooth.size):
        if smooth[i] > smooth[i - 1]:
            rising = True
        elif smooth[i] < smooth[i - 1]:
            if rising and smooth[i - 1] >= floor:
                modes += 1
            rising = False
    if rising and smooth.size and smooth[-1] >= floor:
        modes += 1
    return modes


def write_histogram_csv(summary: HistogramSummary, path) -> None:
    """Rows bin_left,bin_right,count (deterministic 17-digit formatting)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin_left", "bin_right", "count"])
        for i in range(summary.counts.size):
            writer.writerow(
                [
                    format(float(summary.bin_edges[i]), ".17g"),
                    format(float(summary.bin_edges[i + 1]), ".17g"),
                    int(summary.counts[i]),
                ]
            )


# ---------------------------------------------------------------------------
# Bessel machinery
# ---------------------------------------------------------------------------

BESSEL_SERIES_RADIUS = 30.0
_BESSEL_TERM_FLOOR = 1e-16


def bessel_J(z):
    """Even entire series sum_r (-1)^r (z/2)^{2r} / (r!)^2 (J0 for real z).

    Summed with compensated accumulation until the term magnitude falls
    below 1e-16; the series budget caps |z| at 30.
    """
    z_arr = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    if z_arr.size and float(np.max(np.abs(z_arr))) > BESSEL_SERIES_RADIUS:
        raise DomainError(f"series mode covers |z| <= {BESSEL_SERIES_RADIUS:g}")
    w = -0.25 * z_arr * z_arr  # term ratio numerator: term_{r+1} = term_r * w/(r+1)^2
    term = np.ones_like(z_arr)
    total = np.zeros_like(z_arr)
    comp = np.zeros_like(z_arr)
    r = 0
    while True:
        # Kahan step (componentwise on complex).
        yk = term - comp
        tk = total + yk
        comp = (tk - total) - yk
        total = tk
        r += 1
        term = term * w / (r * r)
        if float(np.max(np.abs(term))) < _BESSEL_TERM_FLOOR or r > 300:
            break
    if np.isscalar(z) or np.asarray(z).ndim == 0:
        return complex(total[0])
    return total


@dataclass(frozen=True)
class BesselProduct:
    """Truncated zero products of the transform at each t."""

    t_grid: np.ndarray
    as_written: np.ndarray  # prod J(2 c_rho t), literal complex argument
    modulus: np.ndarray  # prod J0(2 |c_rho| t)
    tail_estimate: np.ndarray  # sum over excluded enriched zeros of |c|^2 t^2
    n_zeros: int


def bessel_product(
    table: ZeroTable, k: int, t_grid, n_zeros: int, variant: str = "both"
) -> BesselProduct:
    """Products over the first n_zeros zeros; tail term reports truncation."""
    t = np.asarray(t_grid, dtype=np.float64)
    g_all, c_all = table.coefficient_array(k, table.max_gamma + 1.0)
    if n_zeros > c_all.size:
        raise DomainError(f"only {c_all.size} enriched zeros available")
    c = c_all[:n_zeros]
    args = 2.0 * np.multiply.outer(t, c)
    written = np.prod(bessel_J(args.ravel()).reshape(args.shape), axis=1)
    mod_args = 2.0 * np.multiply.outer(t, np.abs(c))
    modulus = np.prod(
        bessel_J(mod_args.ravel().astype(complex)).reshape(mod_args.shape).real, axis=1
    )
    excluded = c_all[n_zeros:]
    tail = float(np.sum(np.abs(excluded) ** 2)) * t * t
    return BesselProduct(
        t_grid=t, as_written=written, modulus=modulus, tail_estimate=tail, n_zeros=n_zeros
    )


def empirical_char_fn(sample: DistributionSample, t_grid) -> np.ndarray:
    """(1/n) sum_j exp(i t v_j); exactly 1 at t = 0."""
    if sample.values.size < 1000:
        raise DomainError("characteristic function wants >= 1e3 sample points")
    t = np.asarray(t_grid, dtype=np.float64)
    phases = np.multiply.outer(t, sample.values)
    return np.exp(1j * phases).mean(axis=1)


@dataclass(frozen=True)
class CharFnComparison:
    """Empirical transform vs the two Bessel products on a t grid."""

    t_grid: np.ndarray
    empirical: np.ndarray
    bessel_as_written: np.ndarray
    bessel_modulus_variant: np.ndarray
    tail_estimate: np.ndarray
    n_zeros: int

    @property
    def max_modulus_gap(self) -> float:
        return float(np.max(np.abs(self.empirical - self.bessel_modulus_variant)))


def compare_char_fn(
    sample: DistributionSample, table: ZeroTable, k: int, t_grid, n_zeros: int
) -> CharFnComparison:
    emp = empirical_char_fn(sample, t_grid)
    prod = bessel_product(table, k, t_grid, n_zeros)
    return CharFnComparison(
        t_grid=prod.t_grid,
        empirical=emp,
        bessel_as_written=prod.as_written,
        bessel_modulus_variant=prod.modulus,
        tail_estimate=prod.tail_estimate,
        n_zeros=n_zeros,
    )


CHARFN_CSV_HEADER = [
    "t",
    "re_emp",
    "im_emp",
    "re_bessel_written",
    "im_bessel_written",
    "bessel_modulus",
    "tail_est",
]


def write_charfn_csv(comparison: CharFnComparison, path) -> None:
    def fmt(v: float) -> str:
        return format(float(v), ".17g")

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CHARFN_CSV_HEADER)
        for i, t in enumerate(comparison.t_grid):
            writer.writerow(
                [
                    fmt(t),
                    fmt(comparison.empirical[i].real),
                    fmt(comparison.empirical[i].imag),
                    fmt(comparison.bessel_as_written[i].real),
                    fmt(comparison.bessel_as_written[i].imag),
                    fmt(comparison.bessel_modulus_variant[i]),
                    fmt(comparison.tail_estimate[i]),
                ]
            )


# ---------------------------------------------------------------------------
# Tail diagnostics (boundedness signatures)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TailReport:
    """Partial-sum scans separating the k >= 3 and k = 2 regimes.

    s_sums[k][i] = sum_{gamma < T_i} |c_rho(k)|     (settles for k >= 3)
    d_values[i]  = sum_{gamma < T_i} 1/(|zeta'| g)  (grows without bound)
    gamma_sq[i]  = sum_{gamma < T_i} 1/gamma^2      (convergent companion)
    abel_lhs/rhs: both sides of the partial-summation identity tying
    sum 1/(|zeta'|^2 gamma^{2(k-2)}) to J_{-1}; equal up to roundoff.
    """

    T_grid: tuple[float, ...]
    s_sums: dict[int, tuple[float, ...]]
    d_values: tuple[float, ...]
    gamma_sq: tuple[float, ...]
    j_minus_one_values: tuple[float, ...]
    abel_lhs: dict[int, tuple[float, ...]]
    abel_rhs: dict[int, tuple[float, ...]]

    def _at(self, t: float) -> int:
        try:
            return self.T_grid.index(float(t))
        except ValueError as exc:
            raise DomainError(f"T = {t:g} not in the scanned grid") from exc

    def convergence_increment_ratio(self, k: int, t0: float) -> float:
        """(S_k(2 T0) - S_k(T0)) / S_k(T0); small when the sum has settled."""
        i, j = self._at(t0), self._at(2.0 * t0)
        s = self.s_sums[k]
        return (s[j] - s[i]) / s[i]

    def divergence_ratio(self, t0: float) -> float:
        """D(2 T0) / D(T0); stays > 1 with margin while D keeps growing."""
        i, j = self._at(t0), self._at(2.0 * t0)
        return self.d_values[j] / self.d_values[i]


def _abel_sides(table: ZeroTable, k: int, t: float) -> tuple[float, float]:
    recs = table.require_enriched(t)
    g = np.array([r.gamma for r in recs])
    inv_sq = np.array([1.0 / abs(r.zeta_prime_rho) ** 2 for r in recs])
    p = 2 * (k - 2)
    lhs = float(np.sum(inv_sq / g**p))
    # J_{-1} is a step function; integrate its tail weight exactly by gaps.
    j_run = np.cumsum(inv_sq)
    edges = np.append(g, t)
    lo = np.maximum(edges[:-1], 14.0)
    hi = np.maximum(edges[1:], 14.0)
    rhs = float(j_run[-1]) / t**p if p > 0 else float(j_run[-1])
    if p > 0:
        rhs += float(np.sum(j_run * (lo**-p - hi**-p)))
    return lhs, rhs


def tail_diagnostic(
    table: ZeroTable, k_values: Sequence[int] = (2, 3), t_grid: Sequence[float] = ()
) -> TailReport:
    """Scan the boundedness signatures over a grid of heights."""
    ts = tuple(float(t) for t in t_grid)
    if not ts:
        raise DomainError("tail diagnostic needs a nonempty T grid")
    if max(ts) > 0:
        table.require_enriched(max(ts))
    g_all = table.gammas
    inv_zp = np.array([1.0 / abs(r.zeta_prime_rho) for r in table.records])

    s_sums: dict[int, list[float]] = {k: [] for k in k_values if k >= 3}
    abel_lhs: dict[int, list[float]] = {k: [] for k in k_values if k >= 3}
    abel_rhs: dict[int, list[float]] = {k: [] for k in k_values if k >= 3}
    d_values, gamma_sq, j_vals = [], [], []
    for t in ts:
        n = int(np.searchsorted(g_all, t, side="left"))
        g = g_all[:n]
        d_values.append(float(np.sum(inv_zp[:n] / g)) if n else 0.0)
        gamma_sq.append(float(np.sum(g**-2.0)) if n else 0.0)
        j_vals.append(j_minus_one(table, t))
        for k in s_sums:
            if n:
                _, c = table.coefficient_array(k, t)
                s_sums[k].append(float(np.sum(np.abs(c))))
                lhs, rhs = _abel_sides(table, k, t)
            else:
                s_sums[k].append(0.0)
                lhs, rhs = 0.0, 0.0
            abel_lhs[k].append(lhs)
            abel_rhs[k].append(rhs)
    return TailReport(
        T_grid=ts,
        s_sums={k: tuple(v) for k, v in s_sums.items()},
        d_values=tuple(d_values),
        gamma_sq=tuple(gamma_sq),
        j_minus_one_values=tuple(j_vals),
        abel_lhs={k: tuple(v) for k, v in abel_lhs.items()},
        abel_rhs={k: tuple(v) for k, v in abel_rhs.items()},
    )
