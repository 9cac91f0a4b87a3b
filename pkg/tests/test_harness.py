"""Tests for the experiment engine, record schemas, and the CLI."""

import json
import math
from dataclasses import replace

import numpy as np
import pytest
import yaml

from wsaa import cli
from wsaa.costs import FeasibleBox, Newsvendor
from wsaa.harness import (
    ConfigError,
    ExperimentConfig,
    ExperimentContext,
    PointSettings,
    fit_loglog_slope,
    read_records_csv,
    run_experiment,
    run_replication,
    write_records_csv,
    write_summary_json,
)
from wsaa.kernels import KernelSpec
from wsaa.simulate import NewsvendorDgp, RngStream, sample_dataset, save_dataset_csv


def base_config(**overrides):
    raw = {
        "dgp": "newsvendor_dgp",
        "model": {"kind": "newsvendor", "c_u": 10.0, "c_o": 2.0},
        "box": {"lower": [0.0], "upper": [200.0]},
        "kernel": "gaussian",
        "delta": 0.2,
        "h0": 2.0,
        "x0": {"tau": 0.25},
        "mode": {"type": "unconstrained", "grid": [50, 100]},
        "replications": 4,
        "alpha": 0.05,
        "base_seed": 1234,
        "oracle_n": 20000,
    }
    raw.update(overrides)
    return raw


class TestConfigParsing:
    def test_round_trip(self):
        cfg = ExperimentConfig.from_dict(base_config())
        assert cfg.mode == "unconstrained"
        assert cfg.grid == (50, 100)

    def test_missing_sections_raise_config_error(self):
        raw = base_config()
        del raw["model"]
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(raw)

    def test_budgeted_needs_regime(self):
        raw = base_config(mode={"type": "budgeted", "grid": [1000]})
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(raw)

    def test_x0_must_be_unique(self):
        raw = base_config(x0={"tau": 0.25, "value": [1.0, 2.0]})
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(raw)

    def test_tiny_grid_rejected(self):
        raw = base_config(mode={"type": "unconstrained", "grid": [4]})
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(raw)


class TestRunReplication:
    def make_ctx(self, sim, f_star, mode="unconstrained", **kw):
        return ExperimentContext(
            sim=sim, model=Newsvendor(10.0, 2.0),
            box=FeasibleBox([0.0], [300.0]), kernel=KernelSpec("gaussian"),
            delta=0.2, x0=np.asarray(kw.get("x0", [20.0, math.e])), alpha=0.05,
            base_seed=777, mode=mode,
            algorithm=kw.get("algorithm"), solver_a=kw.get("a"),
            solver_b=kw.get("b"), f_star=f_star,
        )

    def test_degenerate_dgp_covers_exactly(self):
        sim = NewsvendorDgp(x1_sd=0.0, x2_logsd=0.0, noise_sd=0.0)
        ctx = self.make_ctx(sim, f_star=0.0)
        point = PointSettings(100.0, 100, 0, h0=2.0, mu0=None, z0=None)
        rec = run_replication(ctx, point, rep_id=0)
        assert not rec.failed
        assert rec.estimate == pytest.approx(0.0)
        assert rec.covered
        assert rec.half_width == 0.0
        assert rec.optimization_error == 0.0

    def test_repeat_is_byte_identical(self):
        sim = NewsvendorDgp()
        ctx = self.make_ctx(sim, f_star=9.0)
        point = PointSettings(200.0, 200, 0, h0=2.0, mu0=None, z0=None)
        a = run_replication(ctx, point, rep_id=3)
        b = run_replication(ctx, point, rep_id=3)
        assert replace(a, elapsed_ms=0.0) == replace(b, elapsed_ms=0.0)

    def test_unconstrained_has_no_optimization_error(self):
        sim = NewsvendorDgp()
        ctx = self.make_ctx(sim, f_star=9.0)
        rec = run_replication(ctx, PointSettings(150.0, 150, 0, 2.0, None, None), 1)
        assert rec.m == 0
        assert rec.optimization_error == 0.0

    def test_empty_neighborhood_is_captured_not_raised(self):
        sim = NewsvendorDgp()
        ctx = replace(self.make_ctx(sim, f_star=9.0), kernel=KernelSpec("uniform"))
        rec = run_replication(ctx, PointSettings(60.0, 60, 0, 1e-8, None, None), 0)
        assert rec.failed
        assert "EmptyNeighborhood" in rec.failure_reason

    def test_budgeted_mode_runs_solver(self):
        sim = NewsvendorDgp()
        ctx = self.make_ctx(sim, f_star=9.0, mode="budgeted", algorithm="subgradient")
        point = PointSettings(1000.0, 100, 10, h0=2.0, mu0=2.0, z0=(100.0,))
        rec = run_replication(ctx, point, rep_id=0)
        assert rec.solver_iterations == 10
        assert rec.optimization_error >= -1e-10
        assert rec.n * rec.m <= 1000


class TestRunExperiment:
    def test_summary_matches_single_record(self):
        cfg = ExperimentConfig.from_dict(base_config(
            replications=1, mode={"type": "unconstrained", "grid": [120]}))
        records, summary = run_experiment(cfg)
        assert len(records) == 1
        point = summary.points[0]
        rec = records[0]
        assert point.coverage == float(rec.covered)
        denom = abs(summary.f_star)
        assert point.rel_rmse == pytest.approx(abs(rec.estimate - summary.f_star) / denom)
        assert point.mean_rel_width == pytest.approx(2 * rec.half_width / denom)

    def test_deterministic_and_worker_invariant(self):
        cfg = ExperimentConfig.from_dict(base_config(replications=6))
        records1, summary1 = run_experiment(cfg)
        records2, _ = run_experiment(cfg)
        strip = lambda recs: [replace(r, elapsed_ms=0.0) for r in recs]
        assert strip(records1) == strip(records2)
        cfg_par = ExperimentConfig.from_dict(base_config(replications=6, workers=2))
        records3, summary3 = run_experiment(cfg_par)
        assert strip(records1) == strip(records3)
        assert summary1.slope == summary3.slope

    def test_coverage_flag_consistent_with_interval(self):
        cfg = ExperimentConfig.from_dict(base_config(replications=8))
        records, _ = run_experiment(cfg)
        for r in records:
            assert r.covered == (r.lower <= r.f_star <= r.upper)
            assert r.lower == pytest.approx(r.estimate - r.half_width)
            assert r.upper == pytest.approx(r.estimate + r.half_width)

    def test_budgeted_mode_respects_budget(self):
        cfg = ExperimentConfig.from_dict(base_config(
            replications=3,
            mode={
                "type": "budgeted", "grid": [1000, 3162],
                "regime": {"kind": "sublinear", "beta": 0.5},
                "rule": "optimal", "algorithm": "subgradient",
                "solver": {"mu0": 2.0},
            },
        ))
        records, summary = run_experiment(cfg)
        for r in records:
            assert r.n * r.m <= r.grid_value
            assert r.m >= 1
        assert summary.grid_label == "gamma"

    def test_degraded_experiment_flagged(self):
        cfg = ExperimentConfig.from_dict(base_config(
            kernel="uniform", h0=1e-8, replications=3))
        _, summary = run_experiment(cfg)
        assert summary.degraded
        assert summary.points[0].n_failed == 3


class TestFitLoglogSlope:
    def test_perfect_power_law(self):
        slope, _ = fit_loglog_slope([10.0, 100.0], [1.0, 0.1])
        assert slope == pytest.approx(-1.0)

    def test_constant_rmse(self):
        slope, stderr = fit_loglog_slope([10, 100, 1000], [0.5, 0.5, 0.5])
        assert slope == pytest.approx(0.0)
        assert stderr == pytest.approx(0.0)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            fit_loglog_slope([10, 100], [0.0, 1.0])
        with pytest.raises(ValueError):
            fit_loglog_slope([10], [1.0])


class TestOutputs:
    def test_records_csv_round_trip(self, tmp_path):
        cfg = ExperimentConfig.from_dict(base_config(replications=2))
        records, summary = run_experiment(cfg)
        path = tmp_path / "records.csv"
        write_records_csv(records, path)
        rows = read_records_csv(path)
        assert len(rows) == len(records)
        assert rows[0]["schema_version"] == "1"
        assert float(rows[0]["estimate"]) == pytest.approx(records[0].estimate)

    def test_summary_json_schema(self, tmp_path):
        cfg = ExperimentConfig.from_dict(base_config(replications=2))
        _, summary = run_experiment(cfg)
        path = tmp_path / "summary.json"
        write_summary_json(summary, path)
        loaded = json.loads(path.read_text(encoding="utf-8"))
        assert loaded["schema_version"] == 1
        assert loaded["grid_label"] == "n"
        assert len(loaded["points"]) == 2
        assert loaded["theoretical_rate"] == pytest.approx(-0.3)


class TestCli:
    def test_allocate_command(self, capsys):
        code = cli.main(["allocate", "--regime", "linear", "--theta", "0.7975",
                         "--gamma", "100000", "--delta", "0.2", "--dx", "2"])
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert out["m"] == 15
        assert out["n"] == 6666

    def test_solve_and_infer_commands(self, tmp_path, capsys):
        X, Y = sample_dataset(NewsvendorDgp(), 400, RngStream(7, 0))
        data = tmp_path / "d.csv"
        save_dataset_csv(data, X, Y)
        args = ["--data", str(data), "--x0", "18.651,2.2203", "--model", "newsvendor",
                "--cu", "10", "--co", "2", "--h0", "2.0", "--delta", "0.2",
                "--box-lower", "0", "--box-upper", "200"]
        assert cli.main(["solve", *args]) == 0
        decision = json.loads(capsys.readouterr().out)["decision"][0]
        assert 90 < decision < 130
        assert cli.main(["infer", *args, "--alpha", "0.05"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["lower"] < report["estimate"] < report["upper"]

    def test_cv_command(self, tmp_path, capsys):
        X, Y = sample_dataset(NewsvendorDgp(), 200, RngStream(8, 0))
        data = tmp_path / "d.csv"
        save_dataset_csv(data, X, Y)
        code = cli.main(["cv", "--data", str(data), "--x0", "18.651,2.2203",
                         "--model", "newsvendor", "--cu", "10", "--co", "2",
                         "--h0", "1.0", "--delta", "0.2", "--box-lower", "0",
                         "--box-upper", "200", "--h0-grid", "1.0,2.0,4.0", "--k", "4"])
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert out["best_h0"] in (1.0, 2.0, 4.0)

    def test_experiment_command_and_exit_codes(self, tmp_path, capsys):
        cfg_path = tmp_path / "exp.yaml"
        cfg_path.write_text(yaml.safe_dump(base_config(replications=2)), encoding="utf-8")
        out = tmp_path / "out"
        assert cli.main(["experiment", "--config", str(cfg_path), "--out", str(out)]) == 0
        assert (out / "records.csv").exists()
        assert (out / "summary.json").exists()
        capsys.readouterr()

        bad = tmp_path / "bad.yaml"
        bad.write_text("model: {kind: newsvendor}\n", encoding="utf-8")
        assert cli.main(["experiment", "--config", str(bad), "--out", str(out)]) == 2

        degraded = tmp_path / "degraded.yaml"
        degraded.write_text(
            yaml.safe_dump(base_config(kernel="uniform", h0=1e-8, replications=2)),
            encoding="utf-8")
        assert cli.main(["experiment", "--config", str(degraded), "--out", str(out)]) == 3
        capsys.readouterr()

    def test_missing_config_file_is_config_error(self, capsys):
        assert cli.main(["experiment", "--config", "/no/such.yaml", "--out", "/tmp/x"]) == 2
