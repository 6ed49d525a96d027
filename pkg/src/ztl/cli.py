"""Command-line front end.

Subcommands: sieve, compare, perron-check, histogram, charfn, diagnostics.
Machine output (CSV/JSON) goes to the requested files with fixed 17-digit
float formatting and fixed reduction order, so identical configs reproduce
byte-identical artifacts; stderr carries the human-readable log.  With
--plot a matplotlib rendering of the same report is written next to the
delimited output.

Exit codes: 0 success, 2 precision failure, 3 data failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .errors import (
    AccuracyError,
    CapacityError,
    DataError,
    DomainError,
    PrecisionError,
)

EXIT_OK = 0
EXIT_PRECISION = 2
EXIT_DATA = 3
EXIT_USAGE = 64

ZEROS_ENV_VAR = "ZTL_ZEROS_PATH"

log = logging.getLogger("ztl")


class _Parser(argparse.ArgumentParser):
    """argparse with the 64 exit-code contract for usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt17(v: float) -> str:
    return format(float(v), ".17g")


def parse_grid(text: str, name: str) -> list[float]:
    """Numeric grid syntax: either 'v1,v2,...' or 'start:stop:step'."""
    text = text.strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError("range needs start:stop:step")
            start, stop, step = (float(p) for p in parts)
            if step <= 0 or stop < start:
                raise ValueError("need step > 0 and stop >= start")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [start + i * step for i in range(n)]
        values = [float(p) for p in text.split(",") if p.strip()]
        if not values:
            raise ValueError("empty list")
        return values
    except ValueError as exc:
        raise DomainError(f"bad {name} grid {text!r}: {exc}") from exc


def _resolve_zeros(args) -> Path:
    path = args.zeros or os.environ.get(ZEROS_ENV_VAR)
    if not path:
        raise _UsageError(f"--zeros is required (or set {ZEROS_ENV_VAR})")
    return Path(path)


class _UsageError(Exception):
    pass


def _load_enriched(args, k_set, needed_t: float):
    """Enriched zero table from --cache when it covers the run, else built
    from the --zeros height file (and cached back when --cache is given)."""
    from .zeros import enrich_table, ingest_zero_table, load_cache, save_cache

    cache = getattr(args, "cache", None)
    if cache and Path(cache).exists():
        table = load_cache(cache, k_set=k_set)
        if table.max_gamma >= needed_t:
            log.info("loaded %d enriched zeros from cache %s", len(table.records), cache)
            return table
        log.info("cache %s tops out at %.1f < %.1f; rebuilding", cache, table.max_gamma, needed_t)
    path = _resolve_zeros(args)
    raw = ingest_zero_table(path, limit=getattr(args, "zeros_limit", None))
    log.info("ingested %d heights from %s", len(raw.records), path)
    table = enrich_table(raw, k_set=k_set)
    log.info("enriched %d zeros (max height %.3f)", len(table.records), table.max_gamma)
    if cache:
        save_cache(table, cache)
        log.info("wrote enrichment cache %s", cache)
    return table


def _check_k(k: int):
    if not 2 <= k <= 8:
        raise _UsageError(f"--k must lie in [2, 8], got {k}")


def _plot_target(args) -> Path | None:
    """Figure path for a report command: --plot wins, --no-plot disables,
    otherwise the figure lands next to --out with a .png suffix."""
    if args.no_plot:
        return None
    if args.plot:
        return Path(args.plot)
    return Path(args.out).with_suffix(".png")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_sieve(args) -> int:
    from .totient import save_sieve_cache, sieve_totients, summatory_totient

    table = sieve_totients(args.n_max)
    save_sieve_cache(table, args.sieve_cache)
    log.info(
        "sieved phi up to %d (F(n_max) = %d), cache at %s",
        args.n_max,
        summatory_totient(table, args.n_max),
        args.sieve_cache,
    )
    return EXIT_OK


def cmd_compare(args) -> int:
    from .explicit import residual_diagnostic, write_residual_csv
    from .totient import load_sieve_cache, sieve_totients

    _check_k(args.k)
    x_grid = parse_grid(args.x, "--x")
    t_grid = parse_grid(args.T, "--T")
    if min(x_grid) < 2.0:
        raise _UsageError("--x values must be >= 2")
    table = _load_enriched(args, k_set=(args.k,), needed_t=max(t_grid))
    n_need = int(math.ceil(max(x_grid)))
    if args.sieve_cache and Path(args.sieve_cache).exists():
        totients = load_sieve_cache(args.sieve_cache)
        if totients.n_max < n_need:
            log.info("sieve cache too small (%d < %d); resieving", totients.n_max, n_need)
            totients = sieve_totients(n_need)
    else:
        totients = sieve_totients(n_need)
    report = residual_diagnostic(table, totients, (args.k,), x_grid, t_grid)
    write_residual_csv(report, args.out)
    log.info("wrote %d comparison rows to %s", len(report.rows), args.out)
    for k, slope in report.fitted_exponent.items():
        log.info("fitted residual-vs-T exponent (k=%d): %.3f", k, slope)
    plot = _plot_target(args)
    if plot:
        from .plotting import render_residuals

        render_residuals(report, plot)
        log.info("wrote figure %s", plot)
    return EXIT_OK


def cmd_perron_check(args) -> int:
    import csv

    from .explicit import (
        ContourSpec,
        perron_envelope,
        perron_line_integral,
        totient_series_spec,
        unit_series_spec,
    )
    from .totient import RieszMeanRequest, riesz_mean, sieve_totients

    _check_k(args.k)
    x_grid = parse_grid(args.x, "--x")
    t_grid = parse_grid(args.T, "--T")
    if min(x_grid) < 2.0:
        raise _UsageError("--x values must be >= 2")
    spec = totient_series_spec() if args.series == "totient" else unit_series_spec()
    totients = sieve_totients(int(math.ceil(max(x_grid))))

    def direct_mean(k: int, x: float) -> float:
        if args.series == "totient":
            return riesz_mean(totients, RieszMeanRequest(k=k, x=x))
        m = int(math.floor(x))
        n = np.arange(1, m + 1, dtype=np.float64)
        return float(np.sum((math.log(x) - np.log(n)) ** (k - 1))) / math.gamma(k)

    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "x", "c", "T", "integral", "direct", "residual", "envelope"])
        for x in x_grid:
            for t in t_grid:
                contour = ContourSpec(c=args.c, T=t)
                value = perron_line_integral(spec, args.k, x, contour).real
                direct = direct_mean(args.k, x)
                writer.writerow(
                    [
                        args.k,
                        _fmt17(x),
                        _fmt17(args.c),
                        _fmt17(t),
                        _fmt17(value),
                        _fmt17(direct),
                        _fmt17(abs(value - direct)),
                        _fmt17(perron_envelope(spec, args.k, x, contour)),
                    ]
                )
    log.info("wrote inversion check for %d (x, T) pairs to %s", len(x_grid) * len(t_grid), args.out)
    return EXIT_OK


def cmd_histogram(args) -> int:
    from .distribution import build_histogram, sample_normalized, write_histogram_csv
    from .explicit import CorrectionEvaluator

    _check_k(args.k)
    if args.bins < 10:
        raise _UsageError("--bins must be at least 10")
    y_grid = parse_grid(args.y, "--y")
    if len(y_grid) < 2:
        raise _UsageError("--y must describe a nonempty range a:b:step")
    y_min, y_max = y_grid[0], y_grid[-1]
    step = y_grid[1] - y_grid[0]
    table = _load_enriched(args, k_set=(args.k,), needed_t=args.T)
    rng = np.random.default_rng(args.seed) if args.y_sample == "uniform" else None
    sample = sample_normalized(
        table,
        args.k,
        y_min,
        y_max,
        step,
        args.T,
        corrections_evaluator=CorrectionEvaluator(args.k),
        direct_capacity=args.hybrid_capacity,
        uniform_rng=rng,
    )
    summary = build_histogram(sample, args.bins)
    write_histogram_csv(summary, args.out)
    sidecar = {
        "k": args.k,
        "T_requested": args.T,
        "T_used": sample.T_used,
        "y_min": y_min,
        "y_max": y_max,
        "step": step,
        "n": summary.n,
        "bins": args.bins,
        "n_zeros": int(table.count_below(sample.T_used)),
        "mean": summary.mean,
        "std": summary.std,
        "skewness": summary.skewness,
        "corrections_included": sample.corrections_included,
        "method": sample.method.value,
        "y_sample": args.y_sample,
    }
    if sample.hybrid is not None:
        sidecar["hybrid_max_discrepancy"] = sample.hybrid.max_discrepancy
        sidecar["hybrid_points"] = int(sample.hybrid.y.size)
        sidecar["hybrid_within_envelope"] = sample.hybrid.within_envelope
    sidecar_path = Path(args.out).with_suffix(".json")
    with open(sidecar_path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info(
        "wrote %d-bin histogram of %d samples to %s (sidecar %s)",
        args.bins,
        summary.n,
        args.out,
        sidecar_path,
    )
    plot = _plot_target(args)
    if plot:
        from .plotting import render_histogram

        render_histogram(summary, plot, k=args.k, t_used=sample.T_used)
        log.info("wrote figure %s", plot)
    return EXIT_OK


def cmd_charfn(args) -> int:
    from .distribution import compare_char_fn, sample_normalized, write_charfn_csv
    from .explicit import CorrectionEvaluator

    _check_k(args.k)
    y_grid = parse_grid(args.y, "--y")
    t_points = parse_grid(args.t, "--t")
    if len(y_grid) < 2:
        raise _UsageError("--y must describe a nonempty range a:b:step")
    table = _load_enriched(args, k_set=(args.k,), needed_t=args.T)
    sample = sample_normalized(
        table,
        args.k,
        y_grid[0],
        y_grid[-1],
        y_grid[1] - y_grid[0],
        args.T,
        corrections_evaluator=CorrectionEvaluator(args.k),
    )
    n_zeros = args.n_zeros or table.count_below(sample.T_used)
    comparison = compare_char_fn(sample, table, args.k, t_points, n_zeros)
    write_charfn_csv(comparison, args.out)
    log.info(
        "wrote transform comparison on %d t-points (%d zeros) to %s",
        len(t_points),
        n_zeros,
        args.out,
    )
    plot = _plot_target(args)
    if plot:
        from .plotting import render_charfn

        render_charfn(comparison, plot)
        log.info("wrote figure %s", plot)
    return EXIT_OK


def cmd_diagnostics(args) -> int:
    from .distribution import tail_diagnostic
    from .zeros import derivative_bound_scan, j_minus_one_scan, zero_count_check

    k_values = sorted({int(v) for v in parse_grid(args.k, "--k")})
    for k in k_values:
        _check_k(k)
    t_grid = sorted(parse_grid(args.T, "--T"))
    table = _load_enriched(args, k_set=tuple(k_values), needed_t=max(t_grid))
    if max(t_grid) > table.max_gamma:
        raise DataError(
            f"requested T = {max(t_grid):g} beyond the zero table height "
            f"{table.max_gamma:.3f}"
        )
    payload: dict = {
        "zero_count": [
            {
                "T": t,
                "observed": (rep := zero_count_check(table, t)).observed,
                "main_term": rep.main_term,
                "residual": rep.residual,
                "bound": rep.bound,
                "within_bound": rep.within_bound,
            }
            for t in t_grid
        ]
    }
    jscan = j_minus_one_scan(table, t_grid)
    payload["j_minus_one"] = {
        "T_grid": list(jscan.T_grid),
        "values": list(jscan.values),
        "ratios": list(jscan.ratios),
        "mutual_factor": jscan.mutual_factor,
    }
    dscan = derivative_bound_scan(table)
    payload["zeta_prime_bound_scan"] = {
        "max_scaled": dscan.max_scaled,
        "argmax_gamma": dscan.argmax_gamma,
        "fitted_trend": dscan.fitted_trend,
    }
    tails = tail_diagnostic(table, k_values, t_grid)
    tail_payload: dict = {
        "T_grid": list(tails.T_grid),
        "d_values": list(tails.d_values),
        "gamma_sq": list(tails.gamma_sq),
        "j_minus_one": list(tails.j_minus_one_values),
        "s_sums": {str(k): list(v) for k, v in tails.s_sums.items()},
        "abel_lhs": {str(k): list(v) for k, v in tails.abel_lhs.items()},
        "abel_rhs": {str(k): list(v) for k, v in tails.abel_rhs.items()},
        "signatures": {},
    }
    for t0 in tails.T_grid:
        if 2.0 * t0 in tails.T_grid:
            sig = {"divergence_ratio": tails.divergence_ratio(t0)}
            for k in tails.s_sums:
                sig[f"convergence_increment_ratio_k{k}"] = (
                    tails.convergence_increment_ratio(k, t0)
                )
            tail_payload["signatures"][_fmt17(t0)] = sig
    payload["tails"] = tail_payload
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("wrote diagnostics bundle to %s", args.out)
    plot = _plot_target(args)
    if plot:
        from .plotting import render_diagnostics

        render_diagnostics(payload, plot)
        log.info("wrote figure %s", plot)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------


def _add_plot_flags(p):
    p.add_argument("--plot", help="figure path (default: --out with a .png suffix)")
    p.add_argument("--no-plot", action="store_true", help="skip the figure")


def _add_zero_flags(p):
    p.add_argument("--zeros", help=f"zero-height table (default: ${ZEROS_ENV_VAR})")
    p.add_argument("--zeros-limit", type=int, default=None, help="ingest at most N heights")
    p.add_argument("--cache", help="enriched-zero CSV cache to reuse/update")


def build_parser() -> _Parser:
    parser = _Parser(prog="ztl", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("sieve", help="build a totient sieve and store its binary cache")
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--sieve-cache", required=True, help="output path for the binary cache")
    p.set_defaults(func=cmd_sieve)

    p = sub.add_parser("compare", help="direct smoothed error vs zero-sum route")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--x", required=True, help="x grid: list or start:stop:step")
    p.add_argument("--T", required=True, help="truncation heights: list or range")
    _add_zero_flags(p)
    p.add_argument("--sieve-cache", help="binary sieve cache to reuse")
    p.add_argument("--out", required=True, help="output CSV")
    _add_plot_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("perron-check", help="truncated Dirichlet-series inversion check")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--T", required=True)
    p.add_argument("--c", type=float, default=9.0 / 4.0, help="right abscissa (default 9/4)")
    p.add_argument("--series", choices=("totient", "unit"), default="totient")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_perron_check)

    p = sub.add_parser("histogram", help="histogram of the normalized error via zero sums")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--y", required=True, help="y range start:stop:step")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--bins", type=int, required=True)
    _add_zero_flags(p)
    p.add_argument("--out", required=True, help="output CSV (JSON sidecar written alongside)")
    _add_plot_flags(p)
    p.add_argument(
        "--hybrid-capacity",
        type=float,
        default=0.0,
        help="cross-check y with exp(y) <= capacity by direct segmented summation",
    )
    p.add_argument("--y-sample", choices=("grid", "uniform"), default="grid")
    p.add_argument("--seed", type=int, default=0, help="rng seed for --y-sample uniform")
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("charfn", help="empirical characteristic function vs Bessel products")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--y", required=True, help="sample y range start:stop:step")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--t", required=True, help="transform argument grid")
    p.add_argument("--n-zeros", type=int, default=None, help="zeros kept in the products")
    _add_zero_flags(p)
    p.add_argument("--out", required=True)
    _add_plot_flags(p)
    p.set_defaults(func=cmd_charfn)

    p = sub.add_parser("diagnostics", help="zero-count, J_{-1}, and tail signatures bundle")
    p.add_argument("--T", required=True, help="height grid: list or range")
    p.add_argument("--k", default="2,3", help="k list for tail scans (default 2,3)")
    _add_zero_flags(p)
    p.add_argument("--out", required=True, help="output JSON")
    _add_plot_flags(p)
    p.set_defaults(func=cmd_diagnostics)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"ztl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"ztl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PrecisionError, AccuracyError) as exc:
        print(f"ztl: precision failure: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except (DataError, CapacityError, OSError) as exc:
        print(f"ztl: data failure: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
