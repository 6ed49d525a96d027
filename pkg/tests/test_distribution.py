"""Sampling, histograms, Bessel products, characteristic functions, tails."""

import math

import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from ztl.distribution import (
    DistributionSample,
    SampleMethod,
    bessel_J,
    bessel_product,
    build_histogram,
    compare_char_fn,
    count_modes,
    empirical_char_fn,
    sample_normalized,
    tail_diagnostic,
    write_charfn_csv,
    write_histogram_csv,
)
from ztl.errors import DataError, DomainError
from ztl.explicit import CorrectionEvaluator, snap_to_midpoint
from ztl.zeros import ingest_zero_table, enrich_table


class TestSampleNormalized:
    def test_below_first_zero_is_pure_corrections(self, enriched_table):
        ev = CorrectionEvaluator(2)
        s = sample_normalized(
            enriched_table, 2, 1.0, 50.0, 1.0, 10.0, corrections_evaluator=ev
        )
        expected = np.exp(-0.5 * s.y_grid) * ev.evaluate_log(s.y_grid)
        assert np.allclose(s.values, expected, rtol=0, atol=1e-15)

    def test_domain_error_below_log2(self, enriched_table):
        with pytest.raises(DomainError):
            sample_normalized(enriched_table, 2, 0.5, 10.0, 1.0, 100.0)

    def test_hybrid_overlap_within_envelope(self, enriched_table):
        s = sample_normalized(
            enriched_table,
            2,
            1.0,
            60.0,
            1.0,
            500.0,
            corrections_evaluator=CorrectionEvaluator(2),
            direct_capacity=3000.0,
        )
        assert s.method is SampleMethod.HYBRID
        assert s.hybrid is not None
        assert s.hybrid.y.size == 8  # e^y <= 3000 for y <= 8
        assert s.hybrid.within_envelope
        # At these scales the two routes agree far better than the envelope.
        assert s.hybrid.max_discrepancy <= 0.05

    def test_uniform_sampling_flag(self, enriched_table):
        rng = np.random.default_rng(5)
        s = sample_normalized(
            enriched_table, 2, 1.0, 100.0, 1.0, 200.0, uniform_rng=rng,
            corrections_evaluator=CorrectionEvaluator(2),
        )
        assert s.y_grid.size == 100
        assert np.all(np.diff(s.y_grid) > 0)
        assert s.y_grid[0] >= 1.0 and s.y_grid[-1] <= 100.0

    def test_grid_construction(self, enriched_table):
        s = sample_normalized(
            enriched_table, 2, 1.0, 10.0, 1.0, 50.0,
            corrections_evaluator=CorrectionEvaluator(2),
        )
        assert np.array_equal(s.y_grid, np.arange(1.0, 11.0))


@pytest.fixture(scope="module")
def sample(enriched_table):
    return sample_normalized(
        enriched_table, 2, 1.0, 2000.0, 1.0, 500.0,
        corrections_evaluator=CorrectionEvaluator(2),
    )


class TestHistogram:
    def test_conservation(self, sample):
        h = build_histogram(sample, 60)
        assert int(np.sum(h.counts)) == h.n == 2000

    def test_moments_stable_under_binning(self, sample):
        h1 = build_histogram(sample, 10)
        h2 = build_histogram(sample, 200)
        assert h1.mean == h2.mean
        assert h1.std == h2.std
        v = sample.values
        assert h1.mean == pytest.approx(float(np.mean(v)), abs=1e-14)
        assert h1.std == pytest.approx(float(np.std(v)), rel=1e-12)

    def test_degenerate_range(self, enriched_table):
        flat = DistributionSample(
            k=2,
            y_grid=np.arange(1.0, 21.0),
            values=np.full(20, 0.25),
            method=SampleMethod.ZERO_SUM,
            T_used=100.0,
            corrections_included=False,
        )
        with pytest.raises(DomainError, match="degenerate"):
            build_histogram(flat, 10)

    def test_min_bins(self, sample):
        with pytest.raises(DomainError):
            build_histogram(sample, 5)

    def test_csv(self, sample, tmp_path):
        h = build_histogram(sample, 25)
        out = tmp_path / "h.csv"
        write_histogram_csv(h, out)
        lines = out.read_text().splitlines()
        assert lines[0] == "bin_left,bin_right,count"
        assert len(lines) == 26
        assert sum(int(l.split(",")[2]) for l in lines[1:]) == 2000

    def test_count_modes_helper(self):
        assert count_modes([0, 1, 5, 9, 5, 1, 0]) == 1
        two_bumps = [0, 0, 8, 9, 8, 0, 0, 0, 0, 0, 0, 8, 9, 9, 8, 0, 0]
        assert count_modes(two_bumps, smooth_window=3) == 2


class TestBesselJ:
    def test_at_zero(self):
        assert bessel_J(0) == 1.0 + 0.0j

    def test_at_two_vs_scipy(self):
        assert abs(bessel_J(2.0) - sp.j0(2.0)) <= 1e-12
        assert bessel_J(2.0).real == pytest.approx(0.2238907791, abs=1e-10)

    def test_imaginary_argument_is_modified_bessel(self):
        assert abs(bessel_J(2j) - sp.i0(2.0)) <= 1e-12
        assert bessel_J(2j).real == pytest.approx(2.2795853023, abs=1e-10)

    def test_vs_scipy_on_grid(self):
        # Term conditioning of the alternating series grows like I0(|z|) eps,
        # so the agreement floor widens with |z|; tight where the pipeline
        # actually operates (|z| < 10), honest envelope beyond.
        z = np.linspace(0.0, 10.0, 41)
        ours = bessel_J(z.astype(complex))
        assert float(np.max(np.abs(ours.real - sp.j0(z)))) <= 1e-11
        z = np.linspace(10.0, 28.0, 37)
        ours = bessel_J(z.astype(complex))
        assert float(np.max(np.abs(ours.real - sp.j0(z)))) <= 1e-5

    @settings(max_examples=50, deadline=None)
    @given(st.complex_numbers(max_magnitude=20.0, allow_nan=False, allow_infinity=False))
    def test_even_function(self, z):
        assert bessel_J(-z) == bessel_J(z)

    def test_radius_cap(self):
        with pytest.raises(DomainError):
            bessel_J(31.0)


class TestBesselProduct:
    def test_unity_at_zero(self, enriched_table):
        p = bessel_product(enriched_table, 2, [0.0, 1.0], 50)
        assert p.as_written[0] == 1.0 + 0.0j
        assert p.modulus[0] == 1.0
        assert p.tail_estimate[0] == 0.0

    def test_single_zero_small_t_expansion(self, enriched_table):
        c1 = abs(enriched_table.records[0].coefficient(2))
        for t in (1.0, 5.0, 20.0):
            p = bessel_product(enriched_table, 2, [t], 1)
            expansion = 1.0 - c1**2 * t**2
            assert abs(p.modulus[0] - expansion) <= c1**4 * t**4

    def test_truncation_stability(self, enriched_table):
        p100 = bessel_product(enriched_table, 2, [1.0], 100)
        p200 = bessel_product(enriched_table, 2, [1.0], 200)
        assert abs(p100.modulus[0] - p200.modulus[0]) <= p100.tail_estimate[0]
        assert abs(p100.as_written[0] - p200.as_written[0]) <= 2.0 * p100.tail_estimate[0]

    def test_too_many_zeros(self, enriched_table):
        with pytest.raises(DomainError):
            bessel_product(enriched_table, 2, [1.0], 10**6)


class TestEmpiricalCharFn:
    def test_normalization_exact(self, enriched_table):
        s = sample_normalized(
            enriched_table, 2, 1.0, 1200.0, 1.0, 300.0,
            corrections_evaluator=CorrectionEvaluator(2),
        )
        emp = empirical_char_fn(s, [0.0, 0.7])
        assert emp[0] == 1.0 + 0.0j

    def test_conjugation(self, enriched_table):
        s = sample_normalized(
            enriched_table, 2, 1.0, 1200.0, 1.0, 300.0,
            corrections_evaluator=CorrectionEvaluator(2),
        )
        emp = empirical_char_fn(s, [-1.3, 1.3])
        assert abs(emp[0] - np.conj(emp[1])) <= 1e-14

    def test_min_sample_size(self, enriched_table):
        s = sample_normalized(
            enriched_table, 2, 1.0, 100.0, 1.0, 300.0,
            corrections_evaluator=CorrectionEvaluator(2),
        )
        with pytest.raises(DomainError):
            empirical_char_fn(s, [0.0])

    def test_single_zero_time_average_is_bessel(self, enriched_table):
        # Keep exactly one zero (snap just above gamma_1) and no corrections:
        # the y-average of exp(it * 2 Re[c e^{i gamma y}]) tends to J0(2|c|t).
        t_snap, n = snap_to_midpoint(enriched_table, 18.0)
        assert n == 1
        s = sample_normalized(
            enriched_table, 2, 1.0, 10000.0, 1.0, 18.0, include_corrections=False
        )
        c1 = abs(enriched_table.records[0].coefficient(2))
        ts = np.arange(0.0, 2.0001, 0.25)
        # Rescale t so the single-frequency argument sweeps a visible range.
        ts_eff = ts / max(c1, 1e-12)
        emp = empirical_char_fn(s, ts_eff)
        ref = sp.j0(2.0 * c1 * ts_eff)
        assert float(np.max(np.abs(emp - ref))) <= 0.02

    def test_comparison_and_csv(self, enriched_table, tmp_path):
        s = sample_normalized(
            enriched_table, 2, 1.0, 2000.0, 1.0, 500.0,
            corrections_evaluator=CorrectionEvaluator(2),
        )
        comp = compare_char_fn(s, enriched_table, 2, np.arange(0.0, 2.01, 0.5), 100)
        out = tmp_path / "c.csv"
        write_charfn_csv(comp, out)
        lines = out.read_text().splitlines()
        assert lines[0].startswith("t,re_emp,im_emp,re_bessel_written")
        assert len(lines) == 1 + comp.t_grid.size


class TestTailDiagnostic:
    def test_empty_below_first_zero(self, enriched_table):
        rep = tail_diagnostic(enriched_table, (2, 3), (10.0,))
        assert rep.d_values == (0.0,)
        assert rep.s_sums[3] == (0.0,)
        assert rep.gamma_sq == (0.0,)

    def test_signatures(self, enriched_table):
        rep = tail_diagnostic(enriched_table, (2, 3), (1000.0, 2000.0))
        assert rep.convergence_increment_ratio(3, 1000.0) <= 0.25
        assert rep.divergence_ratio(1000.0) >= 1.02

    def test_abel_identity(self, enriched_table):
        rep = tail_diagnostic(enriched_table, (3, 4), (500.0, 1500.0))
        for k in (3, 4):
            for lhs, rhs in zip(rep.abel_lhs[k], rep.abel_rhs[k]):
                assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_gamma_sq_converges_visibly(self, enriched_table):
        rep = tail_diagnostic(enriched_table, (2,), (500.0, 1000.0, 2000.0))
        inc1 = rep.gamma_sq[1] - rep.gamma_sq[0]
        inc2 = rep.gamma_sq[2] - rep.gamma_sq[1]
        assert inc2 < inc1 < 0.05 * rep.gamma_sq[0]

    def test_validation(self, enriched_table):
        with pytest.raises(DomainError):
            tail_diagnostic(enriched_table, (2,), ())
        rep = tail_diagnostic(enriched_table, (2,), (500.0,))
        with pytest.raises(DomainError):
            rep.divergence_ratio(500.0)
