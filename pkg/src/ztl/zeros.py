"""Nontrivial-zero tables: ingestion, refinement, enrichment, diagnostics.

A zero table starts as a plain text list of heights gamma (one decimal per
line, strictly increasing, '#' headers allowed).  Heights from published
tables are treated as approximate: before enrichment each is re-bracketed
and bisected on Hardy Z to 1e-9.  Enrichment then attaches, per zero
rho = 1/2 + i gamma:

* zeta'(rho)             (simplicity: |zeta'| must clear a floor),
* zeta(rho - 1)          (via the reflection side of the engine),
* c_rho(k) = zeta(rho-1) / (zeta'(rho) * rho^k)  for every requested k,

the coefficient with which the zero enters every truncated zero sum.  The
c_rho(k) obey c_rho(k+1) * rho = c_rho(k) exactly up to one rounding, since
they are built by successive division.

Diagnostics cover the counting function N(T) against its smooth main term
(T/2pi) log(T/(2pi e)), the partial sums J_{-1}(T) = sum 1/|zeta'(rho)|^2
whose conjectured linear growth the pipeline leans on, and a scan of
1/(|zeta'(rho)| gamma^theta) recorded (not asserted) against the
conjectured 1/2 - epsilon exponent.

The enriched cache is a text CSV (diffable, implementation-neutral); the
per-k coefficients are rebuilt on load rather than persisted.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DataError, DomainError
from .zeta import T_BUDGET, hardy_Z_batch, locate_zeros, zeta_batch, zeta_deriv_batch

#: |zeta(rho)| above this fails the zero certificate.
ZERO_CERTIFICATE_TOL = 1e-6

#: |zeta'(rho)| below this is treated as a simplicity violation.
SIMPLICITY_FLOOR = 1e-8

REFINE_TOL = 1e-9

GAMMA_1_WINDOW = (14.13, 14.14)

CACHE_HEADER = ["index", "gamma", "re_zp", "im_zp", "re_zm1", "im_zm1"]


def _fmt17(v: float) -> str:
    return format(float(v), ".17g")


@dataclass
class ZeroRecord:
    """One nontrivial zero rho = 1/2 + i gamma with cached enrichment."""

    index: int
    gamma: float
    zeta_prime_rho: complex | None = None
    zeta_rho_minus_one: complex | None = None
    coeff: dict[int, complex] = field(default_factory=dict)

    @property
    def enriched(self) -> bool:
        return self.zeta_prime_rho is not None and self.zeta_rho_minus_one is not None

    @property
    def rho(self) -> complex:
        return 0.5 + 1j * self.gamma

    def coefficient(self, k: int) -> complex:
        """c_rho(k), derived by successive division so c(k+1) rho = c(k)."""
        if not self.enriched:
            raise DataError(f"zero #{self.index} is not enriched")
        if k not in self.coeff:
            base = self.zeta_rho_minus_one / self.zeta_prime_rho
            c = base
            for _ in range(k):
                c = c / self.rho
            self.coeff[k] = c
        return self.coeff[k]


@dataclass
class ZeroTable:
    """Ordered zero records plus provenance."""

    records: list[ZeroRecord]
    source: str = ""

    def __post_init__(self):
        g = self.gammas
        if g.size and not (GAMMA_1_WINDOW[0] < g[0] < GAMMA_1_WINDOW[1]):
            raise DataError(
                f"first height {g[0]:.6f} is not the first zero "
                f"(expected within {GAMMA_1_WINDOW})"
            )
        if np.any(np.diff(g) <= 0):
            raise DataError("zero heights must be strictly increasing")

    @property
    def gammas(self) -> np.ndarray:
        return np.array([r.gamma for r in self.records], dtype=np.float64)

    @property
    def max_gamma(self) -> float:
        return self.records[-1].gamma if self.records else 0.0

    def count_below(self, t: float) -> int:
        """Zeros with gamma < t (the zero-sum truncation convention)."""
        return int(np.searchsorted(self.gammas, t, side="left"))

    def count_upto(self, t: float) -> int:
        """Zeros with gamma <= t (the counting-function convention)."""
        return int(np.searchsorted(self.gammas, t, side="right"))

    def require_enriched(self, t: float) -> list[ZeroRecord]:
        n = self.count_below(t)
        recs = self.records[:n]
        if any(not r.enriched for r in recs):
            raise DataError(f"table is not enriched through T = {t:g}")
        return recs

    def coefficient_array(self, k: int, t: float) -> tuple[np.ndarray, np.ndarray]:
        """(gammas, c_rho(k)) for every zero below t; needs enrichment."""
        recs = self.require_enriched(t)
        g = np.array([r.gamma for r in recs])
        c = np.array([r.coefficient(k) for r in recs], dtype=np.complex128)
        return g, c


def bundled_zero_table_path() -> Path:
    """Path of the zero-height table shipped with the package (~1600 zeros)."""
    return Path(resources.files("ztl").joinpath("data/zeros_2050.txt"))


def ingest_zero_table(path, limit: int | None = None) -> ZeroTable:
    """Parse a plain-text table of increasing zero heights.

    LF or CRLF endings, '#' header lines and trailing blank lines are
    tolerated; anything else unparsable is a DataError with its line number.
    """
    heights: list[float] = []
    with open(path, "r", encoding="utf-8", newline=None) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                value = float(line)
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: not a decimal height: {line!r}") from exc
            if not math.isfinite(value) or value <= 0.0:
                raise DataError(f"{path}: line {lineno}: height must be positive and finite")
            if heights and value <= heights[-1]:
                raise DataError(
                    f"{path}: line {lineno}: heights must be strictly increasing "
                    f"({value:g} after {heights[-1]:g})"
                )
            heights.append(value)
            if limit is not None and len(heights) >= limit:
                break
    if not heights:
        raise DataError(f"{path}: no zero heights found")
    records = [ZeroRecord(index=i + 1, gamma=g) for i, g in enumerate(heights)]
    return ZeroTable(records=records, source=str(path))


def refine_heights(table: ZeroTable, tol: float = REFINE_TOL) -> ZeroTable:
    """Re-bisect every height on Hardy Z; input precision is not trusted.

    Brackets are grown through a few widths; a height whose neighborhood
    shows no sign change fails the zero certificate.
    """
    g = table.gammas
    lo = np.empty_like(g)
    hi = np.empty_like(g)
    unbracketed = np.ones(g.size, dtype=bool)
    for delta in (0.005, 0.02, 0.045):
        if not np.any(unbracketed):
            break
        cand_lo = np.maximum(g[unbracketed] - delta, 1e-6)
        cand_hi = g[unbracketed] + delta
        z_lo = hardy_Z_batch(cand_lo)
        z_hi = hardy_Z_batch(cand_hi)
        ok = z_lo * z_hi < 0.0
        idx = np.nonzero(unbracketed)[0][ok]
        lo[idx] = cand_lo[ok]
        hi[idx] = cand_hi[ok]
        unbracketed[idx] = False
    if np.any(unbracketed):
        bad = g[unbracketed][0]
        raise DataError(f"no Hardy-Z sign change near claimed height {bad:.6f}")

    z_lo = hardy_Z_batch(lo)
    while float(np.max(hi - lo)) > tol:
        mid = 0.5 * (lo + hi)
        z_mid = hardy_Z_batch(mid)
        go_right = np.sign(z_mid) == np.sign(z_lo)
        lo = np.where(go_right, mid, lo)
        z_lo = np.where(go_right, z_mid, z_lo)
        hi = np.where(go_right, hi, mid)
    refined = 0.5 * (lo + hi)
    records = [ZeroRecord(index=i + 1, gamma=float(v)) for i, v in enumerate(refined)]
    return ZeroTable(records=records, source=table.source + " (refined)")


def enrich_zero(record: ZeroRecord, k_set=(2, 3)) -> ZeroRecord:
    """Enrich a single record in place; see enrich_table for the batch path."""
    _enrich_batch([record], k_set)
    return record


def _enrich_batch(records: list[ZeroRecord], k_set) -> None:
    g = np.array([r.gamma for r in records], dtype=np.float64)
    if g.size == 0:
        return
    if float(np.max(g)) > T_BUDGET:
        raise DomainError(f"enrichment limited to gamma <= {T_BUDGET:g}")
    rho = 0.5 + 1j * g
    z_at = zeta_batch(rho)
    bad = np.abs(z_at) > ZERO_CERTIFICATE_TOL
    if np.any(bad):
        i = int(np.nonzero(bad)[0][0])
        raise DataError(
            f"height {g[i]:.9f} fails the zero certificate: "
            f"|zeta(rho)| = {abs(z_at[i]):.3g} > {ZERO_CERTIFICATE_TOL:g}"
        )
    zp = zeta_deriv_batch(rho)
    tiny = np.abs(zp) < SIMPLICITY_FLOOR
    if np.any(tiny):
        i = int(np.nonzero(tiny)[0][0])
        raise DataError(f"|zeta'(rho)| = {abs(zp[i]):.3g} at gamma = {g[i]:.9f}: simplicity violated")
    zm1 = zeta_batch(rho - 1.0)
    for r, d, m in zip(records, zp, zm1):
        r.zeta_prime_rho = complex(d)
        r.zeta_rho_minus_one = complex(m)
        r.coeff.clear()
        for k in k_set:
            r.coefficient(k)


def enrich_table(
    table: ZeroTable, k_set=(2, 3), refine: bool = True, tol: float = REFINE_TOL
) -> ZeroTable:
    """Refine (optional) and enrich every record; returns the frozen table.

    Enrichment is all-or-nothing: the returned table has every record
    enriched, so readers never observe a partial state.
    """
    work = refine_heights(table, tol=tol) if refine else ZeroTable(
        records=[ZeroRecord(index=r.index, gamma=r.gamma) for r in table.records],
        source=table.source,
    )
    _enrich_batch(work.records, k_set)
    return work


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroCountReport:
    T: float
    observed: int
    main_term: float
    residual: float
    bound: float

    @property
    def within_bound(self) -> bool:
        return abs(self.residual) <= self.bound


def zero_count_main_term(t: float) -> float:
    """Smooth count (T/2pi) log(T/(2 pi e))."""
    return t / (2.0 * math.pi) * math.log(t / (2.0 * math.pi * math.e))


def zero_count_check(table: ZeroTable, t: float) -> ZeroCountReport:
    """N(T) against the smooth main term; residual should stay O(log T)."""
    if t > table.max_gamma:
        raise DomainError(f"T = {t:g} exceeds the table height {table.max_gamma:g}")
    n = table.count_upto(t)
    main = zero_count_main_term(t)
    return ZeroCountReport(
        T=t, observed=n, main_term=main, residual=n - main, bound=2.0 * math.log(t) + 5.0
    )


def j_minus_one(table: ZeroTable, t: float) -> float:
    """J_{-1}(T) = sum over 0 < gamma <= T of 1/|zeta'(rho)|^2."""
    n = int(np.searchsorted(table.gammas, t, side="right"))
    recs = table.records[:n]
    if any(not r.enriched for r in recs):
        raise DataError(f"table is not enriched through T = {t:g}")
    return math.fsum(1.0 / abs(r.zeta_prime_rho) ** 2 for r in recs)


@dataclass(frozen=True)
class JMinusOneScan:
    T_grid: tuple[float, ...]
    values: tuple[float, ...]
    ratios: tuple[float, ...]  # J_{-1}(T) / T

    @property
    def mutual_factor(self) -> float:
        """max ratio over min ratio across the grid (linearity signature)."""
        return max(self.ratios) / min(self.ratios)


def j_minus_one_scan(table: ZeroTable, t_grid) -> JMinusOneScan:
    values = tuple(j_minus_one(table, float(t)) for t in t_grid)
    ratios = tuple(v / float(t) for v, t in zip(values, t_grid))
    return JMinusOneScan(T_grid=tuple(float(t) for t in t_grid), values=values, ratios=ratios)


@dataclass(frozen=True)
class DerivativeBoundScan:
    """Scan of 1/(|zeta'(rho)| gamma^theta): recorded, never asserted."""

    gammas: np.ndarray
    half_exponent_values: np.ndarray  # theta = 1/2
    scaled_values: np.ndarray  # theta = 0.4
    argmax_gamma: float
    fitted_trend: float  # LS slope of log(half values) vs log gamma

    @property
    def max_scaled(self) -> float:
        return float(np.max(self.scaled_values))


def derivative_bound_scan(table: ZeroTable) -> DerivativeBoundScan:
    recs = table.require_enriched(table.max_gamma + 1.0)
    g = np.array([r.gamma for r in recs])
    inv = np.array([1.0 / abs(r.zeta_prime_rho) for r in recs])
    half = inv / np.sqrt(g)
    scaled = inv / g**0.4
    slope = float(np.polyfit(np.log(g), np.log(half), 1)[0])
    return DerivativeBoundScan(
        gammas=g,
        half_exponent_values=half,
        scaled_values=scaled,
        argmax_gamma=float(g[int(np.argmax(scaled))]),
        fitted_trend=slope,
    )


# ---------------------------------------------------------------------------
# Enriched cache (text CSV, 17 significant digits)
# ---------------------------------------------------------------------------


def save_cache(table: ZeroTable, path) -> None:
    recs = table.require_enriched(table.max_gamma + 1.0)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CACHE_HEADER)
        for r in recs:
            writer.writerow(
                [
                    r.index,
                    _fmt17(r.gamma),
                    _fmt17(r.zeta_prime_rho.real),
                    _fmt17(r.zeta_prime_rho.imag),
                    _fmt17(r.zeta_rho_minus_one.real),
                    _fmt17(r.zeta_rho_minus_one.imag),
                ]
            )


def load_cache(path, k_set=(2, 3)) -> ZeroTable:
    records: list[ZeroRecord] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CACHE_HEADER:
            raise DataError(f"{path}: unexpected cache header {header}")
        for row in reader:
            if len(row) != 6:
                raise DataError(f"{path}: malformed cache row: {row}")
            rec = ZeroRecord(
                index=int(row[0]),
                gamma=float(row[1]),
                zeta_prime_rho=complex(float(row[2]), float(row[3])),
                zeta_rho_minus_one=complex(float(row[4]), float(row[5])),
            )
            records.append(rec)
    if not records:
        raise DataError(f"{path}: empty cache")
    table = ZeroTable(records=records, source=f"{path} (cache)")
    for r in records:
        for k in k_set:
            r.coefficient(k)
    return table


def count_consistency(table: ZeroTable, t_values) -> dict[float, tuple[int, int]]:
    """Ingested count vs locate_zeros count on (0, T] for each T."""
    out: dict[float, tuple[int, int]] = {}
    for t in t_values:
        t = float(t)
        located = locate_zeros(0.0, t)
        out[t] = (table.count_below(t), int(located.size))
    return out
