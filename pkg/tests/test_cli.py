"""CLI contract: flags, exit codes, file outputs, determinism."""

import json
import os

import numpy as np
import pytest

from ztl.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main, parse_grid
from ztl.errors import DomainError
from ztl.zeros import bundled_zero_table_path

ZEROS = str(bundled_zero_table_path())


@pytest.fixture(scope="module")
def cache_csv(tmp_path_factory):
    """Enrichment cache covering T <= 810, built once for the CLI tests."""
    path = tmp_path_factory.mktemp("cache") / "enriched.csv"
    rc = main(
        [
            "diagnostics",
            "--T",
            "100",
            "--zeros",
            ZEROS,
            "--zeros-limit",
            "500",
            "--cache",
            str(path),
            "--out",
            str(path.parent / "d0.json"),
        ]
    )
    assert rc == EXIT_OK
    return str(path)


class TestParseGrid:
    def test_list(self):
        assert parse_grid("100,1000,10000", "--x") == [100.0, 1000.0, 10000.0]

    def test_range(self):
        assert parse_grid("1:10:1", "--y") == [float(v) for v in range(1, 11)]

    def test_range_fractional_step(self):
        got = parse_grid("0:2:0.5", "--t")
        assert got == [0.0, 0.5, 1.0, 1.5, 2.0]

    def test_bad(self):
        for bad in ("", "1:2", "a,b", "5:1:1", "1:5:-1"):
            with pytest.raises(DomainError):
                parse_grid(bad, "--x")


class TestCompare:
    def test_six_row_csv(self, tmp_path, cache_csv):
        out = tmp_path / "r.csv"
        rc = main(
            [
                "compare", "--k", "2", "--x", "100,1000,10000", "--T", "200,500",
                "--zeros", ZEROS, "--cache", cache_csv, "--out", str(out),
            ]
        )
        assert rc == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == "k,x,T,n_zeros,R_direct,zero_sum,corrections,residual,envelope,ratio"
        assert len(lines) == 7

    def test_deterministic_bytes(self, tmp_path, cache_csv):
        args = [
            "compare", "--k", "2", "--x", "100,1000", "--T", "200",
            "--zeros", ZEROS, "--cache", cache_csv,
        ]
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--out", str(out1)]) == EXIT_OK
        assert main(args + ["--out", str(out2)]) == EXIT_OK
        assert out1.read_bytes() == out2.read_bytes()

    def test_missing_zeros_is_usage_error(self, tmp_path, monkeypatch):
        monkeypatch.delenv("ZTL_ZEROS_PATH", raising=False)
        rc = main(["compare", "--k", "2", "--x", "100", "--T", "200", "--out", str(tmp_path / "r.csv")])
        assert rc == EXIT_USAGE

    def test_env_var_default(self, tmp_path, monkeypatch, cache_csv):
        monkeypatch.setenv("ZTL_ZEROS_PATH", ZEROS)
        out = tmp_path / "r.csv"
        rc = main(
            ["compare", "--k", "2", "--x", "100", "--T", "200", "--cache", cache_csv, "--out", str(out)]
        )
        assert rc == EXIT_OK

    def test_k_one_rejected(self, tmp_path):
        rc = main(
            ["compare", "--k", "1", "--x", "100", "--T", "200", "--zeros", ZEROS, "--out", str(tmp_path / "r.csv")]
        )
        assert rc == EXIT_USAGE

    def test_plot_written(self, tmp_path, cache_csv):
        out, png = tmp_path / "r.csv", tmp_path / "r.png"
        rc = main(
            [
                "compare", "--k", "2", "--x", "100,1000", "--T", "200,400",
                "--zeros", ZEROS, "--cache", cache_csv, "--out", str(out), "--plot", str(png),
            ]
        )
        assert rc == EXIT_OK
        assert png.stat().st_size > 1000


class TestHistogramCommand:
    def test_csv_and_sidecar(self, tmp_path, cache_csv):
        out = tmp_path / "h.csv"
        rc = main(
            [
                "histogram", "--k", "2", "--y", "1:1500:1", "--T", "500", "--bins", "60",
                "--zeros", ZEROS, "--cache", cache_csv, "--out", str(out),
            ]
        )
        assert rc == EXIT_OK
        lines = out.read_text().splitlines()
        assert len(lines) == 61
        assert sum(int(l.split(",")[2]) for l in lines[1:]) == 1500
        sidecar = json.loads((tmp_path / "h.json").read_text())
        assert sidecar["k"] == 2 and sidecar["n"] == 1500
        assert {"mean", "std", "skewness", "T_used", "n_zeros"} <= set(sidecar)

    def test_min_bins_usage_error(self, tmp_path):
        rc = main(
            [
                "histogram", "--k", "2", "--y", "1:100:1", "--T", "200", "--bins", "5",
                "--zeros", ZEROS, "--out", str(tmp_path / "h.csv"),
            ]
        )
        assert rc == EXIT_USAGE

    def test_deterministic_bytes(self, tmp_path, cache_csv):
        def run(tag):
            out = tmp_path / f"{tag}.csv"
            rc = main(
                [
                    "histogram", "--k", "2", "--y", "1:1200:1", "--T", "400", "--bins", "24",
                    "--zeros", ZEROS, "--cache", cache_csv, "--out", str(out),
                ]
            )
            assert rc == EXIT_OK
            return out.read_bytes(), (tmp_path / f"{tag}.json").read_bytes()

        assert run("first") == run("second")

    def test_uniform_sampling_mode(self, tmp_path, cache_csv):
        out = tmp_path / "h.csv"
        rc = main(
            [
                "histogram", "--k", "3", "--y", "1:1200:1", "--T", "300", "--bins", "20",
                "--zeros", ZEROS, "--cache", cache_csv, "--out", str(out),
                "--y-sample", "uniform", "--seed", "7",
            ]
        )
        assert rc == EXIT_OK
        assert json.loads((tmp_path / "h.json").read_text())["y_sample"] == "uniform"

    def test_plot_written(self, tmp_path, cache_csv):
        out, png = tmp_path / "h.csv", tmp_path / "h.png"
        rc = main(
            [
                "histogram", "--k", "2", "--y", "1:1100:1", "--T", "300", "--bins", "20",
                "--zeros", ZEROS, "--cache", cache_csv, "--out", str(out), "--plot", str(png),
            ]
        )
        assert rc == EXIT_OK
        assert png.stat().st_size > 1000


class TestPerronCheckCommand:
    def test_unit_series(self, tmp_path):
        out = tmp_path / "p.csv"
        rc = main(
            ["perron-check", "--k", "2", "--x", "10.5", "--T", "100",
             "--series", "unit", "--c", "2.0", "--out", str(out)]
        )
        assert rc == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == "k,x,c,T,integral,direct,residual,envelope"
        fields = lines[1].split(",")
        assert float(fields[6]) <= float(fields[7])  # residual within envelope

    def test_totient_series(self, tmp_path):
        out = tmp_path / "p.csv"
        rc = main(["perron-check", "--k", "3", "--x", "10", "--T", "150", "--out", str(out)])
        assert rc == EXIT_OK
        fields = out.read_text().splitlines()[1].split(",")
        assert float(fields[6]) <= float(fields[7])


class TestHybridFlag:
    def test_hybrid_capacity_recorded(self, tmp_path, cache_csv):
        out = tmp_path / "h.csv"
        rc = main(
            [
                "histogram", "--k", "2", "--y", "1:1200:1", "--T", "400", "--bins", "30",
                "--zeros", ZEROS, "--cache", cache_csv, "--out", str(out),
                "--hybrid-capacity", "3000",
            ]
        )
        assert rc == EXIT_OK
        sidecar = json.loads((tmp_path / "h.json").read_text())
        assert sidecar["method"] == "hybrid"
        assert sidecar["hybrid_points"] == 8
        assert sidecar["hybrid_within_envelope"] is True


class TestCharFnCommand:
    def test_csv(self, tmp_path, cache_csv):
        out = tmp_path / "c.csv"
        rc = main(
            [
                "charfn", "--k", "2", "--y", "1:1500:1", "--T", "400", "--t", "0:2:0.1",
                "--zeros", ZEROS, "--cache", cache_csv, "--out", str(out),
            ]
        )
        assert rc == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == "t,re_emp,im_emp,re_bessel_written,im_bessel_written,bessel_modulus,tail_est"
        assert len(lines) == 22

    def test_plot_written(self, tmp_path, cache_csv):
        out, png = tmp_path / "c.csv", tmp_path / "c.png"
        rc = main(
            [
                "charfn", "--k", "2", "--y", "1:1100:1", "--T", "300", "--t", "0:1:0.25",
                "--zeros", ZEROS, "--cache", cache_csv, "--out", str(out), "--plot", str(png),
            ]
        )
        assert rc == EXIT_OK
        assert png.stat().st_size > 1000


class TestDiagnosticsCommand:
    def test_bundle(self, tmp_path, cache_csv):
        out = tmp_path / "d.json"
        rc = main(
            [
                "diagnostics", "--T", "100,200,400,800", "--k", "2,3",
                "--zeros", ZEROS, "--cache", cache_csv, "--out", str(out),
            ]
        )
        assert rc == EXIT_OK
        payload = json.loads(out.read_text())
        count_100 = next(row for row in payload["zero_count"] if row["T"] == 100.0)
        assert count_100["observed"] == 29
        assert "residual" in count_100
        assert payload["tails"]["signatures"]
        sig = payload["tails"]["signatures"]["100"]
        assert "divergence_ratio" in sig and "convergence_increment_ratio_k3" in sig

    def test_plot_written(self, tmp_path, cache_csv):
        out, png = tmp_path / "d.json", tmp_path / "d.png"
        rc = main(
            [
                "diagnostics", "--T", "100,200,400", "--zeros", ZEROS,
                "--cache", cache_csv, "--out", str(out), "--plot", str(png),
            ]
        )
        assert rc == EXIT_OK
        assert png.stat().st_size > 1000

    def test_default_plot_and_no_plot(self, tmp_path, cache_csv):
        out = tmp_path / "d.json"
        rc = main(
            ["diagnostics", "--T", "100", "--zeros", ZEROS, "--cache", cache_csv,
             "--out", str(out)]
        )
        assert rc == EXIT_OK
        assert (tmp_path / "d.png").stat().st_size > 1000
        out2 = tmp_path / "e.json"
        rc = main(
            ["diagnostics", "--T", "100", "--zeros", ZEROS, "--cache", cache_csv,
             "--out", str(out2), "--no-plot"]
        )
        assert rc == EXIT_OK
        assert not (tmp_path / "e.png").exists()

    def test_empty_zero_file_is_data_error(self, tmp_path):
        empty = tmp_path / "empty.txt"
        empty.write_text("")
        rc = main(["diagnostics", "--T", "100", "--zeros", str(empty), "--out", str(tmp_path / "d.json")])
        assert rc == EXIT_DATA

    def test_T_beyond_table_is_data_error(self, tmp_path, cache_csv):
        rc = main(
            [
                "diagnostics", "--T", "5000", "--zeros", ZEROS, "--zeros-limit", "50",
                "--out", str(tmp_path / "d.json"),
            ]
        )
        assert rc == EXIT_DATA


class TestCacheRebuild:
    def test_insufficient_cache_is_rebuilt(self, tmp_path):
        cache = tmp_path / "enr.csv"
        # Seed a cache covering only gamma <= ~143 (50 zeros).
        rc = main(
            ["diagnostics", "--T", "100", "--zeros", ZEROS, "--zeros-limit", "50",
             "--cache", str(cache), "--out", str(tmp_path / "d1.json")]
        )
        assert rc == EXIT_OK
        small = cache.stat().st_size
        # A taller request must rebuild the cache from the height file.
        rc = main(
            ["diagnostics", "--T", "200", "--zeros", ZEROS, "--zeros-limit", "120",
             "--cache", str(cache), "--out", str(tmp_path / "d2.json")]
        )
        assert rc == EXIT_OK
        assert cache.stat().st_size > small


class TestSieveCommand:
    def test_build_and_reuse(self, tmp_path, cache_csv):
        cache = tmp_path / "phi.bin"
        rc = main(["sieve", "--n-max", "4000", "--sieve-cache", str(cache)])
        assert rc == EXIT_OK
        assert cache.stat().st_size == 8 + 4 * 4000
        out = tmp_path / "r.csv"
        rc = main(
            [
                "compare", "--k", "2", "--x", "100,2000", "--T", "200",
                "--zeros", ZEROS, "--cache", cache_csv,
                "--sieve-cache", str(cache), "--out", str(out),
            ]
        )
        assert rc == EXIT_OK


class TestUsage:
    def test_unknown_subcommand_exits_64(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == EXIT_USAGE

    def test_missing_required_flag_exits_64(self):
        with pytest.raises(SystemExit) as exc:
            main(["compare", "--k", "2"])
        assert exc.value.code == EXIT_USAGE
