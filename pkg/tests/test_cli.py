"""End-to-end command-line tests, run in-process through ``cli.main``."""

from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from mgsr import cli, srmodel
from mgsr.datagen import read_windows, single_mode_field, solve_poisson_spectral
from mgsr.grid import Grid, diff_norm, read_grid
from mgsr.solver import ConvergenceLog

@pytest.fixture(autouse=True)
def clean_seed_env(monkeypatch):
    monkeypatch.delenv("MGSR_SEED", raising=False)


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Shared inputs: a single-mode RHS pair and crafted SR weights."""
    root = tmp_path_factory.mktemp("cli")
    rc = cli.main(
        ["datagen", "--kind", "mode", "--n", "48", "--mode-k", "2",
         "--out", str(root / "m48")]
    )
    assert rc == 0
    srmodel.save_weights(
        srmodel.make_nearest_neighbor_weights(), root / "nn.mgsr"
    )
    return root


class TestDatagen:
    def test_mode_writes_pair(self, tmp_path, capsys):
        rc = cli.main(
            ["datagen", "--kind", "mode", "--n", "32", "--mode-k", "2",
             "--out", str(tmp_path / "m")]
        )
        assert rc == 0
        assert "wrote" in capsys.readouterr().out
        f = read_grid(tmp_path / "m_f.mgg")
        p = read_grid(tmp_path / "m_p.mgg")
        assert f.n == p.n == 32
        p_ref, f_ref = single_mode_field(32, 2)
        assert np.array_equal(f.data, f_ref.data)
        assert np.array_equal(p.data, p_ref.data)

    def test_mode_requires_mode_k(self, tmp_path, capsys):
        rc = cli.main(
            ["datagen", "--kind", "mode", "--n", "32", "--out", str(tmp_path / "m")]
        )
        assert rc == 2
        assert "mode-k" in capsys.readouterr().err

    def test_missing_n_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            cli.main(["datagen", "--kind", "mode", "--mode-k", "2",
                      "--out", str(tmp_path / "m")])
        assert exc.value.code == 2

    def test_missing_out_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["datagen", "--kind", "mode", "--n", "32", "--mode-k", "2"])
        assert exc.value.code == 2

    def test_turb_writes_quadruple_deterministically(self, tmp_path):
        for stem in ("a", "b"):
            rc = cli.main(
                ["datagen", "--kind", "turb", "--n", "32", "--k-peak", "4",
                 "--seed", "3", "--out", str(tmp_path / stem)]
            )
            assert rc == 0
        for suffix in ("f", "p", "u", "v"):
            first = (tmp_path / f"a_{suffix}.mgg").read_bytes()
            second = (tmp_path / f"b_{suffix}.mgg").read_bytes()
            assert first == second

    def test_windows_corpus(self, tmp_path):
        out = tmp_path / "train.mgwp"
        rc = cli.main(
            ["datagen", "--kind", "windows", "--n", "24", "--k-peak", "4",
             "--fields", "2", "--count", "8", "--p-rms", "1e-4",
             "--out", str(out)]
        )
        assert rc == 0
        pairs = read_windows(out)
        assert len(pairs) == 8
        for pair in pairs:
            assert np.array_equal(pair.lr, pair.hr[::2, ::2])


class TestSolve:
    def test_spline_solve_end_to_end(self, workdir, tmp_path, capsys):
        out_grid = tmp_path / "sol.mgg"
        out_log = tmp_path / "log.csv"
        rc = cli.main(
            ["solve", "--rhs", str(workdir / "m48_f.mgg"),
             "--out-grid", str(out_grid), "--out-log", str(out_log)]
        )
        assert rc == 0
        stdout = capsys.readouterr().out
        assert "converged=True" in stdout
        sol = read_grid(out_grid)
        oracle = solve_poisson_spectral(read_grid(workdir / "m48_f.mgg"),
                                        discrete=True)
        assert diff_norm(sol, oracle) < 1e-8
        log = ConvergenceLog.read_csv(out_log)
        assert log.converged(1e-10)
        assert log.iterations <= 20
        assert all(r.operator == "spline" for r in log.records)

    def test_iteration_starved_run_exits_3(self, workdir, capsys):
        rc = cli.main(
            ["solve", "--rhs", str(workdir / "m48_f.mgg"), "--n-iter", "2"]
        )
        assert rc == 3
        assert "converged=False" in capsys.readouterr().out

    def test_sr_mode_requires_weights_flag(self, workdir, capsys):
        rc = cli.main(["solve", "--rhs", str(workdir / "m48_f.mgg"),
                       "--mode", "sr"])
        assert rc == 2
        assert "--weights" in capsys.readouterr().err

    def test_hybrid_solve_uses_both_operators(self, workdir, tmp_path, capsys):
        out_log = tmp_path / "log.csv"
        rc = cli.main(
            ["solve", "--rhs", str(workdir / "m48_f.mgg"),
             "--mode", "hybrid", "--weights", str(workdir / "nn.mgsr"),
             "--s-thres", "1e-5", "--out-log", str(out_log)]
        )
        assert rc == 0
        stdout = capsys.readouterr().out
        assert "converged=True" in stdout
        ops = [r.operator for r in ConvergenceLog.read_csv(out_log).records]
        assert "sr" in ops and "spline" in ops

    def test_corrupt_weights_file(self, workdir, tmp_path, capsys):
        bad = tmp_path / "bad.mgsr"
        bad.write_bytes(b"not a weight file")
        rc = cli.main(
            ["solve", "--rhs", str(workdir / "m48_f.mgg"),
             "--mode", "sr", "--weights", str(bad)]
        )
        assert rc == 2
        assert "bad weights file" in capsys.readouterr().err

    def test_missing_rhs_file(self, tmp_path, capsys):
        rc = cli.main(["solve", "--rhs", str(tmp_path / "nope.mgg")])
        assert rc == 2
        assert "not found" in capsys.readouterr().err

    def test_corrupt_rhs_file(self, tmp_path, capsys):
        bad = tmp_path / "junk.mgg"
        bad.write_bytes(b"\x00" * 64)
        rc = cli.main(["solve", "--rhs", str(bad)])
        assert rc == 2
        assert "bad RHS file" in capsys.readouterr().err

    def test_config_file_is_honored(self, workdir, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"seed": 7}))
        grid_a = tmp_path / "a.mgg"
        grid_b = tmp_path / "b.mgg"
        rc = cli.main(["solve", "--rhs", str(workdir / "m48_f.mgg"),
                       "--config", str(cfg_path), "--out-grid", str(grid_a)])
        assert rc == 0
        rc = cli.main(["solve", "--rhs", str(workdir / "m48_f.mgg"),
                       "--seed", "7", "--out-grid", str(grid_b)])
        assert rc == 0
        assert grid_a.read_bytes() == grid_b.read_bytes()

    def test_flag_overrides_config(self, workdir, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"N_iter": 2}))
        rc = cli.main(["solve", "--rhs", str(workdir / "m48_f.mgg"),
                       "--config", str(cfg_path), "--n-iter", "100"])
        assert rc == 0  # the flag lifts the starved budget from the file

    def test_unknown_config_key(self, workdir, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"bogus": 1}))
        rc = cli.main(["solve", "--rhs", str(workdir / "m48_f.mgg"),
                       "--config", str(cfg_path)])
        assert rc == 2
        assert "unknown config keys" in capsys.readouterr().err

    def test_malformed_config(self, workdir, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text("{not json")
        rc = cli.main(["solve", "--rhs", str(workdir / "m48_f.mgg"),
                       "--config", str(cfg_path)])
        assert rc == 2
        assert "bad config" in capsys.readouterr().err

    def test_missing_config_file(self, workdir, tmp_path, capsys):
        rc = cli.main(["solve", "--rhs", str(workdir / "m48_f.mgg"),
                       "--config", str(tmp_path / "nope.json")])
        assert rc == 2
        assert "config file not found" in capsys.readouterr().err


class TestSeedEnv:
    def test_env_seed_matches_flag(self, workdir, tmp_path, monkeypatch):
        grid_env = tmp_path / "env.mgg"
        grid_flag = tmp_path / "flag.mgg"
        monkeypatch.setenv("MGSR_SEED", "5")
        rc = cli.main(["solve", "--rhs", str(workdir / "m48_f.mgg"),
                       "--out-grid", str(grid_env)])
        assert rc == 0
        monkeypatch.delenv("MGSR_SEED")
        rc = cli.main(["solve", "--rhs", str(workdir / "m48_f.mgg"),
                       "--seed", "5", "--out-grid", str(grid_flag)])
        assert rc == 0
        assert grid_env.read_bytes() == grid_flag.read_bytes()

    def test_env_seed_must_be_integer(self, workdir, monkeypatch, capsys):
        monkeypatch.setenv("MGSR_SEED", "abc")
        rc = cli.main(["solve", "--rhs", str(workdir / "m48_f.mgg")])
        assert rc == 2
        assert "MGSR_SEED" in capsys.readouterr().err


class TestSpectrum:
    def test_mode_spectrum_peaks_at_k(self, workdir, tmp_path, capsys):
        out = tmp_path / "spec.csv"
        rc = cli.main(["spectrum", "--in", str(workdir / "m48_f.mgg"),
                       "--out", str(out)])
        assert rc == 0
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["k", "power"]
        ks = [int(r[0]) for r in rows[1:]]
        power = [float(r[1]) for r in rows[1:]]
        assert ks == list(range(48 // 2 + 1))
        assert int(np.argmax(power)) == 2

    def test_peak_normalize(self, workdir, tmp_path):
        out = tmp_path / "spec.csv"
        rc = cli.main(["spectrum", "--in", str(workdir / "m48_f.mgg"),
                       "--peak-normalize", "--out", str(out)])
        assert rc == 0
        with open(out, newline="") as fh:
            power = [float(r[1]) for r in list(csv.reader(fh))[1:]]
        assert max(power) == 1.0

    def test_bad_input_file(self, tmp_path, capsys):
        rc = cli.main(["spectrum", "--in", str(tmp_path / "nope.mgg"),
                       "--out", str(tmp_path / "spec.csv")])
        assert rc == 2
        assert "bad grid file" in capsys.readouterr().err


def read_sweep(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestSweep:
    def test_smoothing_sweep_grid(self, workdir, tmp_path):
        out = tmp_path / "sweep.csv"
        rc = cli.main(
            ["sweep", "--param", "N_smooth", "--values", "10,20",
             "--replicates", "2", "--rhs", str(workdir / "m48_f.mgg"),
             "--out", str(out)]
        )
        assert rc == 0
        rows = read_sweep(out)
        assert list(rows[0].keys()) == list(cli.SWEEP_COLUMNS)
        assert len(rows) == 4
        assert [(r["value"], r["replicate"]) for r in rows] == [
            ("10", "0"), ("10", "1"), ("20", "0"), ("20", "1"),
        ]
        assert all(r["converged"] == "1" for r in rows)
        assert all(r["rhs_id"] == "m48_f" for r in rows)
        assert all(float(r["final_diff"]) < 1e-10 for r in rows)

    def test_scale_iters_normalizes_work(self, workdir, tmp_path):
        plain = tmp_path / "plain.csv"
        scaled = tmp_path / "scaled.csv"
        base = ["sweep", "--param", "N_smooth", "--values", "10,20",
                "--rhs", str(workdir / "m48_f.mgg")]
        assert cli.main(base + ["--out", str(plain)]) == 0
        assert cli.main(base + ["--scale-iters", "--out", str(scaled)]) == 0
        raw = {r["value"]: float(r["iters_to_converge"]) for r in read_sweep(plain)}
        cooked = {r["value"]: float(r["iters_to_converge"]) for r in read_sweep(scaled)}
        assert cooked["10"] == raw["10"] * 0.5
        assert cooked["20"] == raw["20"]

    def test_parallel_jobs_reproduce_serial_output(self, workdir, tmp_path):
        serial = tmp_path / "serial.csv"
        parallel = tmp_path / "parallel.csv"
        base = ["sweep", "--param", "N_smooth", "--values", "10,20",
                "--rhs", str(workdir / "m48_f.mgg")]
        assert cli.main(base + ["--jobs", "1", "--out", str(serial)]) == 0
        assert cli.main(base + ["--jobs", "2", "--out", str(parallel)]) == 0
        assert serial.read_bytes() == parallel.read_bytes()

    def test_k_peak_sweep_generates_sources(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"N_grid": 48}))
        out = tmp_path / "kpeak.csv"
        rc = cli.main(["sweep", "--param", "k_peak", "--values", "2,3",
                       "--config", str(cfg_path), "--out", str(out)])
        assert rc == 0
        rows = read_sweep(out)
        assert len(rows) == 2
        assert all(r["converged"] == "1" for r in rows)

    def test_k_peak_sweep_needs_grid_size(self, tmp_path, capsys):
        rc = cli.main(["sweep", "--param", "k_peak", "--values", "2,3",
                       "--out", str(tmp_path / "k.csv")])
        assert rc == 2
        assert "N_grid" in capsys.readouterr().err

    def test_grid_size_sweep_resamples(self, workdir, tmp_path):
        out = tmp_path / "ngrid.csv"
        rc = cli.main(["sweep", "--param", "N_grid", "--values", "24,48",
                       "--rhs", str(workdir / "m48_f.mgg"), "--out", str(out)])
        assert rc == 0
        rows = read_sweep(out)
        assert [r["value"] for r in rows] == ["24", "48"]
        assert all(r["converged"] == "1" for r in rows)

    def test_operator_ratio_sweep_in_hybrid_mode(self, workdir, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({
            "mode": "hybrid",
            "weights": str(workdir / "nn.mgsr"),
            "S_thres": 1e-5,
        }))
        out = tmp_path / "ngan.csv"
        rc = cli.main(["sweep", "--param", "N_GAN", "--values", "0.5,1,2",
                       "--rhs", str(workdir / "m48_f.mgg"),
                       "--config", str(cfg_path), "--out", str(out)])
        assert rc == 0
        rows = read_sweep(out)
        assert len(rows) == 3
        assert all(r["converged"] == "1" for r in rows)

    def test_unknown_param(self, workdir, tmp_path, capsys):
        rc = cli.main(["sweep", "--param", "bogus", "--values", "1",
                       "--rhs", str(workdir / "m48_f.mgg"),
                       "--out", str(tmp_path / "s.csv")])
        assert rc == 2
        assert "--param" in capsys.readouterr().err

    def test_rhs_required(self, tmp_path, capsys):
        rc = cli.main(["sweep", "--param", "N_smooth", "--values", "10",
                       "--out", str(tmp_path / "s.csv")])
        assert rc == 2
        assert "--rhs" in capsys.readouterr().err

    def test_empty_values(self, workdir, tmp_path, capsys):
        rc = cli.main(["sweep", "--param", "N_smooth", "--values", " , ",
                       "--rhs", str(workdir / "m48_f.mgg"),
                       "--out", str(tmp_path / "s.csv")])
        assert rc == 2
        assert "--values" in capsys.readouterr().err

    def test_replicates_must_be_positive(self, workdir, tmp_path, capsys):
        rc = cli.main(["sweep", "--param", "N_smooth", "--values", "10",
                       "--replicates", "0",
                       "--rhs", str(workdir / "m48_f.mgg"),
                       "--out", str(tmp_path / "s.csv")])
        assert rc == 2
        assert "--replicates" in capsys.readouterr().err


class TestBench:
    def test_backend_comparison(self, tmp_path, capsys):
        out = tmp_path / "bench.csv"
        rc = cli.main(["bench", "--sizes", "16,32", "--sweeps", "2",
                       "--repeats", "1", "--out", str(out)])
        assert rc == 0
        stdout = capsys.readouterr().out
        assert "ms/sweep" in stdout
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["n", "backend", "gs_ms_per_sweep", "laplacian_ms"]
        backends = {r[1] for r in rows[1:]}
        assert "numpy" in backends
        assert len(rows) - 1 == 2 * len(backends)
