"""Truncated explicit-formula machinery for the smoothed totient error.

The chain this module implements and numerically verifies:

* kernel integrals ``(1/2 pi i) int_{c-iT}^{c+iT} a^s / s^k ds`` against
  their closed form ``1_{a>1} log(a)^(k-1) / (k-1)!`` with the two error
  envelopes (one for log(a) bounded away from 0, one for a near 1);
* the truncated inversion of a Dirichlet series alpha(s): the vertical line
  integral of ``alpha(s) x^s / s^k`` approximates the order-(k-1) Riesz mean
  of its coefficients, with an explicit four-term envelope;
* the zero-side representation: ``R_{k-1}(x) ~ 2 Re sum_{0<gamma<T}
  c_rho(k) x^rho`` plus corrections from the residue at s = 0 and the
  trivial zeros, with the six-term truncation envelope evaluated at unit
  implied constants and epsilon = 0 (a diagnostic scale, not a proof).

Truncation heights are always snapped to zero-gap midpoints with a clearance
of 0.05 from the neighboring zeros, standing in for the non-constructive
good heights the contour argument requires: the point of those heights is
that 1/zeta stays tame on the horizontal segments, which the midpoint scan
in :func:`residual_diagnostic` confirms empirically.

Quadrature is panelled Gauss-Legendre along the vertical segment, folded
onto t >= 0 (every integrand here satisfies f(conj s) = conj f(s), making
the result exactly real), with panel lengths short enough for >= 4 nodes
per oscillation period and a halving self-check.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import AccuracyError, DataError, DomainError
from .oscillation import cos_sin_product
from .totient import MAX_K, MIN_K, PrecisionMode, TotientTable, smoothed_error
from .zeros import ZeroTable
from .zeta import dirichlet_quotient_batch, zeta, zeta_batch, _zeta_deriv_trivial

DEFAULT_ABSCISSA = 9.0 / 4.0
MIDPOINT_CLEARANCE = 0.05

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


# ---------------------------------------------------------------------------
# Folded vertical-line quadrature
# ---------------------------------------------------------------------------


def _panel_edges(t_max: float, base_len: float, c: float) -> np.ndarray:
    """Graded panel edges on [0, t_max]: short near t = 0 where 1/s^k varies
    on the scale of c, growing to base_len (the oscillation cap) away from it."""
    edges = [0.0]
    t = 0.0
    while t < t_max:
        h = min(base_len, 0.5 * max(c, t))
        t = min(t_max, t + h)
        edges.append(t)
    return np.asarray(edges)


def _split_edges(edges: np.ndarray) -> np.ndarray:
    mids = 0.5 * (edges[:-1] + edges[1:])
    out = np.empty(edges.size * 2 - 1)
    out[0::2] = edges
    out[1::2] = mids
    return out


def _gl_pass(f, c: float, edges: np.ndarray, nodes: int) -> float:
    x_gl, w_gl = _gl_rule(nodes)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    ts = (mid[:, None] + half[:, None] * x_gl[None, :]).ravel()
    vals = f(c + 1j * ts).reshape(half.size, nodes)
    per_panel = (vals * w_gl[None, :]).sum(axis=1) * half
    return float(per_panel.sum().real) / math.pi


def fold_line_integral(
    f: Callable[[np.ndarray], np.ndarray],
    c: float,
    t_max: float,
    base_len: float,
    nodes: int = 16,
    rel_tol: float = 5e-11,
    abs_tol: float = 1e-13,
    max_refine: int = 3,
) -> tuple[float, float]:
    """(1/2 pi i) * int_{c-iT}^{c+iT} f(s) ds for conjugate-symmetric f.

    Folding the two half-lines makes the value exactly real.  Panels are
    halved until two successive passes agree; returns (value, last change).
    """
    edges = _panel_edges(t_max, base_len, c)
    prev = None
    for _ in range(max_refine + 1):
        val = _gl_pass(f, c, edges, nodes)
        if prev is not None:
            delta = abs(val - prev)
            if delta <= max(abs_tol, rel_tol * abs(val)):
                return val, delta
        prev = val
        edges = _split_edges(edges)
    raise AccuracyError(
        f"line quadrature did not settle after {max_refine} halvings "
        f"(last change {abs(val - prev):.3g})"
    )


# ---------------------------------------------------------------------------
# Kernel integrals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelCheck:
    """Quadrature value of the a^s/s^k kernel against its closed form."""

    a: float
    c: float
    T: float
    k: int
    mode: str
    value: float
    closed_form: float
    residual: float
    envelope: float
    quad_error: float

    @property
    def within_envelope(self) -> bool:
        return abs(self.residual) <= self.envelope


def kernel_closed_form(a: float, k: int) -> float:
    return math.log(a) ** (k - 1) / math.factorial(k - 1) if a > 1.0 else 0.0


def kernel_envelope(a: float, c: float, t_max: float, k: int, mode: str) -> float:
    if mode == "far":
        return 5.0 * a**c / (t_max**k * abs(math.log(a)))
    # Near a = 1 the log(a) envelope is useless; the uniform bound applies
    # for 1/2 <= a <= 2 (unit constants, epsilon = 0).
    return t_max ** (1 - k) + 2.0**c * c / t_max**k


def kernel_integral(
    a: float,
    c: float,
    t_max: float,
    k: int,
    mode: str = "auto",
    nodes: int = 16,
) -> KernelCheck:
    """(1/2 pi i) int a^s/s^k ds on the segment Re(s) = c, |Im(s)| <= T."""
    if a <= 0.0:
        raise DomainError("kernel needs a > 0")
    if c <= 0.0 or t_max <= 0.0 or k < 2:
        raise DomainError("kernel needs c > 0, T > 0, k >= 2")
    if mode == "auto":
        mode = "near" if 0.5 <= a <= 2.0 else "far"
    if mode == "far" and a == 1.0:
        raise DomainError("a = 1 has no closed form in far mode")
    if mode == "near" and not 0.5 <= a <= 2.0:
        raise DomainError("near mode covers 1/2 <= a <= 2")

    ln_a = math.log(a)
    base_len = 1.0 if ln_a == 0.0 else min(1.0, math.pi / (2.0 * abs(ln_a)))

    def f(s: np.ndarray) -> np.ndarray:
        return np.exp(s * ln_a) / s**k

    value, quad_err = fold_line_integral(f, c, t_max, base_len, nodes=nodes)
    closed = kernel_closed_form(a, k)
    return KernelCheck(
        a=a,
        c=c,
        T=t_max,
        k=k,
        mode=mode,
        value=value,
        closed_form=closed,
        residual=value - closed,
        envelope=kernel_envelope(a, c, t_max, k, mode),
        quad_error=quad_err,
    )


# ---------------------------------------------------------------------------
# Generalized truncated inversion of a Dirichlet series
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DirichletSeriesSpec:
    """A Dirichlet series alpha(s) = sum a_n n^-s with growth metadata.

    ``alpha`` evaluates the series (vectorized over complex arrays),
    ``coeff`` returns a_n for integer arrays, ``sigma_a`` is the abscissa of
    absolute convergence, ``phi_bound`` a nondecreasing majorant of |a_n|,
    and ``abs_series(c)`` equals sum |a_n| n^-c for c > sigma_a.
    """

    name: str
    alpha: Callable[[np.ndarray], np.ndarray]
    coeff: Callable[[np.ndarray], np.ndarray]
    sigma_a: float
    phi_bound: Callable[[float], float]
    abs_series: Callable[[float], float]


def unit_series_spec() -> DirichletSeriesSpec:
    """a_n = 1, alpha = zeta."""
    return DirichletSeriesSpec(
        name="unit",
        alpha=zeta_batch,
        coeff=lambda n: np.ones_like(np.asarray(n, dtype=np.float64)),
        sigma_a=1.0,
        phi_bound=lambda y: 1.0,
        abs_series=lambda c: float(zeta(c).real),
    )


def totient_series_spec() -> DirichletSeriesSpec:
    """a_n = phi(n), alpha = zeta(s-1)/zeta(s)."""

    def coeff(n):
        from .totient import sieve_totients

        n = np.asarray(n, dtype=np.int64)
        table = sieve_totients(int(n.max()))
        return table.phi[n].astype(np.float64)

    return DirichletSeriesSpec(
        name="totient",
        alpha=dirichlet_quotient_batch,
        coeff=coeff,
        sigma_a=2.0,
        phi_bound=lambda y: float(y),
        abs_series=lambda c: float((zeta(c - 1.0) / zeta(c)).real),
    )


@dataclass(frozen=True)
class ContourSpec:
    """Vertical-segment parameters for the truncated inversion.

    ``c`` is the right abscissa (9/4 for the totient run, which needs
    c > 2), ``T`` the height, ``M`` the trivial-zero count kept by the
    correction terms, ``nodes``/``base_len`` the quadrature panel rule
    (base_len None picks min(1, pi / (2 log x)) per call).
    """

    c: float = DEFAULT_ABSCISSA
    T: float = 200.0
    M: int = 5
    nodes: int = 16
    base_len: float | None = None

    def __post_init__(self):
        if self.c <= 0.0 or self.T <= 0.0 or self.M < 0:
            raise DomainError("contour needs c > 0, T > 0, M >= 0")


def perron_line_integral(
    spec: DirichletSeriesSpec, k: int, x: float, contour: ContourSpec
) -> complex:
    """(1/2 pi i) int alpha(s) x^s / s^k ds on Re(s) = contour.c.

    Approximates the order-(k-1) Riesz mean of the coefficients for
    c > max(sigma_a, 0); exactly real by the folded quadrature.
    """
    if x < 2.0:
        raise DomainError("inversion contract needs x >= 2")
    if k < 2:
        raise DomainError("k >= 2 required")
    if contour.c <= max(spec.sigma_a, 0.0):
        raise DomainError(
            f"series '{spec.name}' diverges on Re(s) = {contour.c:g}; "
            f"need c > {spec.sigma_a:g}"
        )
    ln_x = math.log(x)
    base_len = contour.base_len or min(1.0, math.pi / (2.0 * ln_x))

    def f(s: np.ndarray) -> np.ndarray:
        return spec.alpha(s) * np.exp(s * ln_x) / s**k

    value, _ = fold_line_integral(f, contour.c, contour.T, base_len, nodes=contour.nodes)
    return complex(value)


def perron_envelope(spec: DirichletSeriesSpec, k: int, x: float, contour: ContourSpec) -> float:
    """Four-term truncation envelope at unit constants and epsilon = 0."""
    c, t = contour.c, contour.T
    phi = spec.phi_bound
    return (
        phi(x + 1.0) / t ** (k - 1)
        + 2.0**c * c * phi(x + 1.0) / t**k
        + x**c / t**k * spec.abs_series(c)
        + 2.0**c * x * math.log(x) * phi(2.0 * x) / t**k
    )


# ---------------------------------------------------------------------------
# Corrections: residue at s = 0 plus the trivial-zero sum
# ---------------------------------------------------------------------------


class CorrectionEvaluator:
    """Residue of zeta(s-1) x^s / (zeta(s) s^k) at s = 0, plus trivial zeros.

    The residue is the contour integral on the circle |s| = radius (any
    radius inside |s| < 2 gives the same value; radius independence is a
    shipped test).  The circle is sampled once at conjugate-symmetric nodes;
    combining the node values with s^{-m} extracts the Taylor coefficients
    of zeta(s-1)/zeta(s) at 0, which turn the residue into the degree-(k-1)
    polynomial in log x

        r0(k, x) = sum_{j<k} taylor[k-1-j] * (log x)^j / j!.

    The polynomial form matters: the distribution pipeline needs x = e^y for
    y up to 1e4, where any direct x^{s_j} node sum overflows.  The literal
    node-sum form is kept (``residue_contour_direct``) and agrees with the
    polynomial wherever it is representable.

    The trivial zeros at s = -2m contribute zeta(-2m-1)/zeta'(-2m) *
    x^{-2m} / (-2m)^k; ``printed_denominator`` switches the denominator to
    (-2m)^2, a variant form sometimes written for this term (the (-2m)^k
    form is what the residue calculus gives and is the default).
    """

    def __init__(
        self,
        k: int,
        n_trivial: int = 5,
        radius: float = 0.25,
        n_nodes: int = 64,
        printed_denominator: bool = False,
    ):
        if not MIN_K <= k <= MAX_K:
            raise DomainError(f"k must lie in [{MIN_K}, {MAX_K}]")
        if not 0.0 < radius < 2.0:
            raise DomainError("radius must keep the circle inside |s| < 2")
        self.k = k
        self.n_trivial = n_trivial
        self.radius = radius
        self.printed_denominator = printed_denominator
        theta = 2.0 * math.pi * (np.arange(n_nodes) + 0.5) / n_nodes
        s_nodes = radius * np.exp(1j * theta)
        q = dirichlet_quotient_batch(s_nodes)
        self._s_nodes = s_nodes
        self._node_weights = q * s_nodes ** (1 - k) / n_nodes
        # taylor[m] = m-th Taylor coefficient of zeta(s-1)/zeta(s) at s = 0,
        # real because the quotient is real on the real axis.
        self._taylor = np.array(
            [float(np.mean(q * s_nodes ** (-m)).real) for m in range(k)]
        )
        self._poly = np.array(
            [self._taylor[k - 1 - j] / math.factorial(j) for j in range(k)]
        )

        ms = np.arange(1, n_trivial + 1)
        num = zeta_batch((-2.0 * ms - 1.0).astype(complex)).real
        den = np.array([_zeta_deriv_trivial(int(m)) for m in ms])
        power = 2 if printed_denominator else k
        self._trivial_coef = num / den / (-2.0 * ms) ** power

    def residue_at_zero_log(self, log_x) -> np.ndarray:
        lx = np.atleast_1d(np.asarray(log_x, dtype=np.float64))
        powers = np.power.outer(lx, np.arange(self.k, dtype=np.float64))
        return powers @ self._poly

    def residue_at_zero(self, x) -> float:
        return float(self.residue_at_zero_log(math.log(x))[0])

    def residue_contour_direct(self, x: float) -> float:
        """The residue as the literal node sum (1/n) sum q_j s_j^{1-k} x^{s_j}.

        Overflows for log(x) * radius beyond ~700; the polynomial route is
        the production path, this one exists to validate it.
        """
        lx = math.log(x)
        return float((np.exp(lx * self._s_nodes) @ self._node_weights).real)

    def trivial_sum_log(self, log_x) -> np.ndarray:
        lx = np.atleast_1d(np.asarray(log_x, dtype=np.float64))
        ms = np.arange(1, self.n_trivial + 1)
        return np.exp(np.multiply.outer(lx, -2.0 * ms)) @ self._trivial_coef

    def trivial_sum(self, x) -> float:
        return float(self.trivial_sum_log(math.log(x))[0])

    def trivial_first_term_bound(self, x: float) -> float:
        """|first trivial term| bound zeta(2) * 3/(2 pi) * x^-2 / 2^k."""
        power = 2 if self.printed_denominator else self.k
        return float(zeta(2.0).real) * 3.0 / (2.0 * math.pi) * x**-2 / 2.0**power

    def evaluate_log(self, log_x) -> np.ndarray:
        return self.residue_at_zero_log(log_x) + self.trivial_sum_log(log_x)

    def __call__(self, x: float) -> float:
        if x < 2.0:
            raise DomainError("corrections defined for x >= 2")
        return float(self.evaluate_log(math.log(x))[0])


def corrections(
    k: int,
    x: float,
    n_trivial: int = 5,
    radius: float = 0.25,
    printed_denominator: bool = False,
) -> float:
    """One-shot corrections value; build a CorrectionEvaluator for batches."""
    ev = CorrectionEvaluator(
        k, n_trivial=n_trivial, radius=radius, printed_denominator=printed_denominator
    )
    return ev(x)


# ---------------------------------------------------------------------------
# Zero sums
# ---------------------------------------------------------------------------


def snap_to_midpoint(
    table: ZeroTable, t_req: float, clearance: float = MIDPOINT_CLEARANCE
) -> tuple[float, int]:
    """Largest zero-gap midpoint <= t_req with the required clearance.

    Below the first zero the request passes through unchanged (empty sum).
    Midpoints of gaps narrower than 2 * clearance are skipped so the
    snapped height never sits within ``clearance`` of a zero.
    """
    g = table.gammas
    if g.size == 0 or t_req < g[0]:
        return float(t_req), 0
    i = int(np.searchsorted(g, t_req, side="right")) - 1
    if i >= g.size - 1:
        i = g.size - 2
    while i >= 0:
        mid = 0.5 * (g[i] + g[i + 1])
        if mid <= t_req and mid - g[i] >= clearance and g[i + 1] - mid >= clearance:
            return float(mid), i + 1
        i -= 1
    raise DataError(
        f"no admissible zero-gap midpoint <= {t_req:g} above the first zero"
    )


def zero_sum_envelope(k: int, x: float, t: float) -> float:
    """Six-term truncation envelope, unit constants, epsilon = 0."""
    lx = math.log(x)
    return (
        x / t ** (k - 1)
        + x ** (9.0 / 4.0) / t**k
        + x ** (5.0 / 8.0) / t ** (k - 7.0 / 4.0)
        + x**1.5 / t ** (k - 7.0 / 8.0)
        + lx ** (k - 1)
        + t ** (-(k - 2)) * math.sqrt(x * math.log(t) / t)
    )


@dataclass(frozen=True)
class ZeroSumResult:
    """Truncated zero-side value of R_{k-1}(x) with its error envelope."""

    k: int
    x: float
    T: float
    value: float
    n_zeros_used: int
    envelope: float
    corrections: float

    @property
    def total(self) -> float:
        return self.value + self.corrections


def zero_sum(
    table: ZeroTable,
    k: int,
    x: float,
    t_req: float,
    corrections_evaluator: CorrectionEvaluator | None = None,
    include_corrections: bool = True,
) -> ZeroSumResult:
    """2 Re sum_{0<gamma<T} c_rho(k) x^rho at the snapped height T <= t_req.

    The conjugate pair of each zero is folded analytically, so the value is
    assembled from real parts only and no imaginary component ever exists.
    Requires the table enriched through the snapped height.
    """
    if not MIN_K <= k <= MAX_K:
        raise DomainError(f"k must lie in [{MIN_K}, {MAX_K}]")
    if x < 2.0 or t_req < 2.0:
        raise DomainError("zero sums are defined for x >= 2 and T >= 2")
    t_snap, n_used = snap_to_midpoint(table, t_req)
    if n_used:
        g, c = table.coefficient_array(k, t_snap)
        cos_ph, sin_ph = cos_sin_product(g, np.full_like(g, math.log(x)))
        value = 2.0 * math.sqrt(x) * float(np.sum(c.real * cos_ph - c.imag * sin_ph))
    else:
        value = 0.0
    corr = 0.0
    if include_corrections:
        ev = corrections_evaluator or CorrectionEvaluator(k)
        if ev.k != k:
            raise DomainError(f"corrections evaluator is for k = {ev.k}, not {k}")
        corr = ev(x)
    return ZeroSumResult(
        k=k,
        x=x,
        T=t_snap,
        value=value,
        n_zeros_used=n_used,
        envelope=zero_sum_envelope(k, x, t_snap),
        corrections=corr,
    )


# ---------------------------------------------------------------------------
# End-to-end residual diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResidualRow:
    k: int
    x: float
    T: float
    n_zeros: int
    R_direct: float
    zero_sum: float
    corrections: float
    residual: float
    envelope: float
    ratio: float


@dataclass(frozen=True)
class SegmentScanRow:
    """Max of |zeta(sigma-1+iT)/zeta(sigma+iT)| over sigma in [-1/4, 2]."""

    T: float
    max_quotient: float
    min_abs_zeta: float


@dataclass(frozen=True)
class ResidualReport:
    rows: tuple[ResidualRow, ...]
    fitted_exponent: dict[int, float]
    segment_scan: tuple[SegmentScanRow, ...]

    def rows_for(self, k: int) -> list[ResidualRow]:
        return [r for r in self.rows if r.k == k]


def _segment_scan(t_values: Sequence[float]) -> tuple[SegmentScanRow, ...]:
    sigma = np.arange(-0.25, 2.0 + 1e-12, 1.0 / 16.0)
    out = []
    for t in t_values:
        s = sigma + 1j * t
        den = zeta_batch(s)
        num = zeta_batch(s - 1.0)
        out.append(
            SegmentScanRow(
                T=float(t),
                max_quotient=float(np.max(np.abs(num) / np.abs(den))),
                min_abs_zeta=float(np.min(np.abs(den))),
            )
        )
    return tuple(out)


def residual_diagnostic(
    table: ZeroTable,
    totients: TotientTable,
    k_values: Sequence[int],
    x_grid: Sequence[float],
    t_grid: Sequence[float],
    mode: PrecisionMode = PrecisionMode.COMPENSATED,
) -> ResidualReport:
    """Direct R_{k-1} vs zero-sum route over an (x, T) grid.

    Reports per-point residual/envelope ratios, the least-squares exponent
    of the x-aggregated residual against the snapped height (the truncation
    decay rate), and the midpoint scan confirming tame 1/zeta on the
    horizontal segments.
    """
    x_grid = [float(x) for x in x_grid]
    if any(x > totients.n_max for x in x_grid):
        raise DomainError("every x in the grid must fit the sieve capacity")
    rows: list[ResidualRow] = []
    fitted: dict[int, float] = {}
    snapped = sorted({snap_to_midpoint(table, float(t))[0] for t in t_grid})
    for k in k_values:
        ev = CorrectionEvaluator(k)
        direct = {
            x: smoothed_error(totients, k, x, mode=mode, strict=False).R_value
            for x in x_grid
        }
        rms_per_t = []
        for t in snapped:
            residuals = []
            for x in x_grid:
                zs = zero_sum(table, k, x, t, corrections_evaluator=ev)
                resid = abs(direct[x] - zs.total)
                residuals.append(resid)
                rows.append(
                    ResidualRow(
                        k=k,
                        x=x,
                        T=zs.T,
                        n_zeros=zs.n_zeros_used,
                        R_direct=direct[x],
                        zero_sum=zs.value,
                        corrections=zs.corrections,
                        residual=resid,
                        envelope=zs.envelope,
                        ratio=resid / zs.envelope,
                    )
                )
            rms_per_t.append(math.sqrt(math.fsum(r * r for r in residuals) / len(residuals)))
        if len(snapped) >= 2:
            fitted[k] = float(
                np.polyfit(np.log(snapped), np.log(rms_per_t), 1)[0]
            )
    return ResidualReport(
        rows=tuple(rows),
        fitted_exponent=fitted,
        segment_scan=_segment_scan(snapped),
    )


RESIDUAL_CSV_HEADER = [
    "k",
    "x",
    "T",
    "n_zeros",
    "R_direct",
    "zero_sum",
    "corrections",
    "residual",
    "envelope",
    "ratio",
]


def write_residual_csv(report: ResidualReport, path) -> None:
    """Residual rows at 17 significant digits (deterministic byte output)."""

    def fmt(v: float) -> str:
        return format(float(v), ".17g")

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESIDUAL_CSV_HEADER)
        for r in report.rows:
            writer.writerow(
                [
                    r.k,
                    fmt(r.x),
                    fmt(r.T),
                    r.n_zeros,
                    fmt(r.R_direct),
                    fmt(r.zero_sum),
                    fmt(r.corrections),
                    fmt(r.residual),
                    fmt(r.envelope),
                    fmt(r.ratio),
                ]
            )
