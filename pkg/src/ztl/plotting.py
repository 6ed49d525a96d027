"""Figure rendering for the CLI report paths.

Every renderer takes the already-computed report object plus a target file;
figures are written with the Agg backend so the CLI stays headless.  The
delimited outputs remain the primary, deterministic artifacts; the figures
are companions for eyeballing the same data.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_FIGSIZE = (7.0, 4.4)
_DPI = 150


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def render_histogram(summary, path, k: int, t_used: float) -> None:
    """Bar rendering of a normalized-error histogram."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    widths = np.diff(summary.bin_edges)
    ax.bar(
        summary.bin_edges[:-1],
        summary.counts,
        width=widths,
        align="edge",
        color="#4878cf",
        edgecolor="white",
        linewidth=0.3,
    )
    ax.set_xlabel(rf"$e^{{-y/2}} R_{{{k - 1}}}(e^y)$")
    ax.set_ylabel("count")
    ax.set_title(
        f"normalized error, k={k} (n={summary.n}, T={t_used:.1f}, "
        f"mean={summary.mean:.2e}, std={summary.std:.3e})"
    )
    _finish(fig, path)


def render_charfn(comparison, path) -> None:
    """Empirical transform against both Bessel products."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    t = comparison.t_grid
    ax.plot(t, comparison.empirical.real, "o-", ms=3, lw=1, label="empirical Re")
    ax.plot(t, comparison.empirical.imag, "s--", ms=3, lw=0.8, label="empirical Im")
    ax.plot(t, comparison.bessel_modulus_variant, lw=1.5, label="product, modulus variant")
    ax.plot(
        t,
        comparison.bessel_as_written.real,
        lw=1.0,
        ls=":",
        label="product, complex argument (Re)",
    )
    ax.set_xlabel("t")
    ax.set_ylabel("characteristic function")
    ax.set_title(f"transform comparison over {comparison.n_zeros} zeros")
    ax.legend(fontsize=8)
    _finish(fig, path)


def render_residuals(report, path) -> None:
    """Residual/envelope ratios per x, one trace per snapped height."""
    fig, axes = plt.subplots(1, 2, figsize=(10.0, 4.2))
    ks = sorted({r.k for r in report.rows})
    for ax, k in zip(axes, ks):
        rows = report.rows_for(k)
        for t in sorted({r.T for r in rows}):
            pts = [(r.x, r.ratio) for r in rows if r.T == t]
            xs, ratios = zip(*pts)
            ax.loglog(xs, ratios, "o-", ms=3, lw=0.8, label=f"T={t:.0f}")
        ax.axhline(1.0, color="k", lw=0.8, ls="--")
        exp = report.fitted_exponent.get(k)
        ax.set_title(f"k={k}" + (f", fitted T-exponent {exp:.2f}" if exp is not None else ""))
        ax.set_xlabel("x")
        ax.set_ylabel("residual / envelope")
        ax.legend(fontsize=7)
    for ax in axes[len(ks) :]:
        ax.set_visible(False)
    _finish(fig, path)


def render_diagnostics(payload: dict, path) -> None:
    """Zero-count residuals and J_{-1}(T)/T ratios from a diagnostics bundle."""
    fig, axes = plt.subplots(1, 2, figsize=(10.0, 4.2))
    counts = payload.get("zero_count", [])
    if counts:
        ts = [row["T"] for row in counts]
        res = [row["residual"] for row in counts]
        bound = [row["bound"] for row in counts]
        axes[0].plot(ts, res, "o-", label="N(T) - main term")
        axes[0].plot(ts, bound, "k--", lw=0.8, label="+/- bound")
        axes[0].plot(ts, [-b for b in bound], "k--", lw=0.8)
        axes[0].set_xlabel("T")
        axes[0].set_ylabel("count residual")
        axes[0].legend(fontsize=8)
    jm = payload.get("j_minus_one")
    if jm:
        axes[1].plot(jm["T_grid"], jm["ratios"], "s-", color="#b24a3b")
        axes[1].set_xlabel("T")
        axes[1].set_ylabel(r"$J_{-1}(T)\,/\,T$")
        axes[1].set_ylim(bottom=0.0)
    _finish(fig, path)
