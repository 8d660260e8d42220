import json
import math

import numpy as np
import pytest

from widesense.cli import main
from widesense.errors import InvalidSpecError, ParameterError
from widesense.experiments import (
    EXPERIMENT_NAMES,
    ExperimentConfig,
    ResultTable,
    default_config,
    load_config,
    run_acss_vs_cs,
    run_error_tracking,
    run_experiment,
    run_halting_probability,
    run_interval_coverage,
    run_phase_transition,
    run_sasr_vs_omp,
    run_single_frame,
    significant_relative_mse,
)
from widesense.validation import confidence_floor_noisy

DESK_FRAME = {
    "frame_length": 0.8e-6,
    "min_transmission": 0.48e-6,
    "time_step": 0.04e-6,
    "nyquist_rate": 5e9,
    "sub_nyquist_rate": 1e9,
}

TRACKING_MINI = dict(
    DESK_FRAME,
    sparsity=8,
    tone_groups=2,
    amplitude_scale=1.0,
    background_level=1e-4,
    max_sparsity=20,
    error_threshold=1.0,
    confidence_factor=0.2,
    min_testing=10,
)


def _coverage_cfg(**overrides):
    fields = dict(
        name="interval_coverage",
        trials=5,
        grid={"confidence_factor": [0.3], "testing_size": [10]},
        base={"signal_length": 32},
        master_seed=1,
    )
    fields.update(overrides)
    return ExperimentConfig(**fields)


class TestExperimentConfig:
    def test_rejects_unknown_name(self):
        with pytest.raises(InvalidSpecError):
            ExperimentConfig(name="phase_transitions", trials=1)

    def test_rejects_bad_counts(self):
        with pytest.raises(InvalidSpecError):
            ExperimentConfig(name="phase_transition", trials=0)
        with pytest.raises(InvalidSpecError):
            ExperimentConfig(name="phase_transition", trials=1, workers=0)

    def test_rejects_foreign_grid_key(self):
        with pytest.raises(InvalidSpecError):
            ExperimentConfig(name="phase_transition", trials=1, grid={"testing_size": [1]})

    def test_rejects_empty_grid_list(self):
        with pytest.raises(InvalidSpecError):
            ExperimentConfig(name="phase_transition", trials=1, grid={"sparsity": []})

    def test_rejects_foreign_base_key(self):
        with pytest.raises(InvalidSpecError):
            ExperimentConfig(name="phase_transition", trials=1, base={"sigma": 2.0})

    def test_digest_tracks_result_fields_only(self):
        a = _coverage_cfg()
        assert a.digest() == _coverage_cfg().digest()
        assert a.digest() != _coverage_cfg(trials=6).digest()
        assert a.digest() != _coverage_cfg(master_seed=2).digest()
        # workers and output_path shape execution, not results
        assert a.digest() == _coverage_cfg(workers=4, output_path="x.csv").digest()

    def test_round_trip(self):
        cfg = _coverage_cfg(output_path="out.csv", workers=2)
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(InvalidSpecError):
            ExperimentConfig.from_dict({"name": "single_frame", "trials": 1, "jobs": 2})


class TestLoadConfig:
    def test_reads_json_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(_coverage_cfg().to_dict()))
        assert load_config(str(path)) == _coverage_cfg()

    def test_missing_file(self, tmp_path):
        with pytest.raises(InvalidSpecError):
            load_config(str(tmp_path / "nope.json"))

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{broken")
        with pytest.raises(InvalidSpecError):
            load_config(str(path))


class TestResultTable:
    def _table(self):
        schema = ("a", "b", "c", "d")
        rows = ({"a": None, "b": True, "c": 7, "d": 0.5},)
        return ResultTable("demo", schema, rows)

    def test_rejects_row_key_mismatch(self):
        with pytest.raises(ParameterError):
            ResultTable("demo", ("a",), ({"b": 1},))

    def test_csv_formatting(self):
        assert self._table().to_csv_text() == "a,b,c,d\n,1,7,0.5\n"

    def test_json_rows_keep_schema_order(self):
        payload = json.loads(self._table().to_json_text())
        assert payload["experiment"] == "demo"
        assert payload["schema"] == ["a", "b", "c", "d"]
        assert payload["rows"] == [{"a": None, "b": 1, "c": 7, "d": 0.5}]

    def test_column_access(self):
        assert self._table().column("c") == [7]
        with pytest.raises(ParameterError):
            self._table().column("z")

    def test_write_csv_and_json(self, tmp_path):
        table = self._table()
        csv_path = tmp_path / "t.csv"
        table.write(str(csv_path), "csv")
        assert csv_path.read_text() == table.to_csv_text()
        json_path = tmp_path / "t.json"
        table.write(str(json_path), "json")
        assert json.loads(json_path.read_text())["experiment"] == "demo"
        with pytest.raises(ParameterError):
            table.write(str(tmp_path / "t.txt"), "txt")
        assert not list(tmp_path.glob("*.part"))


class TestSignificantRelativeMse:
    def test_ignores_insignificant_bins(self):
        truth = np.array([10.0, 0.05, 5.0])
        estimate = np.array([10.0, 99.0, 5.0])
        assert significant_relative_mse(truth, estimate) == 0.0

    def test_averages_per_bin_ratios(self):
        truth = np.array([2.0, 4.0])
        estimate = np.array([1.0, 6.0])
        # (1/4 + 4/16) / 2
        assert significant_relative_mse(truth, estimate) == pytest.approx(0.25)

    def test_zero_truth_returns_estimate_energy(self):
        assert significant_relative_mse(np.zeros(3), np.array([0.0, 2.0, 0.0])) == 4.0

    def test_shape_mismatch(self):
        with pytest.raises(ParameterError):
            significant_relative_mse(np.zeros(3), np.zeros(4))


class TestRunners:
    def test_phase_transition_mini(self):
        cfg = ExperimentConfig(
            name="phase_transition",
            trials=3,
            grid={"measurements": [20], "sparsity": [0, 2, 40]},
            base={"signal_length": 64},
            master_seed=5,
        )
        table = run_phase_transition(cfg)
        assert len(table) == 3
        by_k = {row["sparsity"]: row for row in table.rows}
        assert by_k[0]["success_rate"] == 1.0
        assert by_k[0]["status"] == "ok"
        assert by_k[40]["status"] == "not_applicable"
        assert by_k[40]["success_rate"] is None
        assert by_k[40]["mean_mse"] is None

    def test_interval_coverage_mini(self):
        table = run_interval_coverage(_coverage_cfg())
        assert len(table) == 1
        row = table.rows[0]
        assert 0.0 <= row["empirical_coverage"] <= 1.0
        assert row["bound_value"] == pytest.approx(
            max(0.0, 1.0 - 4.0 * math.exp(-10 * 0.09)), abs=1e-12
        )

    def test_error_tracking_mini(self):
        cfg = ExperimentConfig(
            name="error_tracking",
            trials=2,
            grid={"testing_per_step": [10]},
            base=dict(TRACKING_MINI),
            master_seed=9,
        )
        table = run_error_tracking(cfg)
        assert table.rows[0]["step"] == 1
        assert table.rows[0]["reached"] == 2
        steps = table.column("step")
        assert steps == sorted(steps)
        assert all(row["testing_per_step"] == 10 for row in table.rows)
        assert all(0.0 <= row["window_fraction"] <= 1.0 for row in table.rows)

    def test_acss_mini_and_empty_band(self):
        cfg = ExperimentConfig(
            name="acss_vs_cs",
            trials=2,
            grid={"sub_nyquist_rate": [1e9], "sparsity": [0, 8]},
            master_seed=3,
        )
        table = run_acss_vs_cs(cfg)
        by_k = {row["sparsity"]: row for row in table.rows}
        # an unoccupied band is the easy case for both strategies
        assert by_k[0]["success_rate"] == 1.0
        assert by_k[0]["baseline_success_rate"] == 1.0
        assert by_k[0]["mean_p_final"] == 1.0
        assert all(row["baseline_steps"] == 8 for row in table.rows)

    def test_halting_probability_mini(self):
        cfg = ExperimentConfig(
            name="halting_probability",
            trials=20,
            grid={"accuracy_factor": [0.6], "testing_size": [10]},
            base={"signal_length": 100, "noise_std": 1.0},
            master_seed=2,
        )
        table = run_halting_probability(cfg)
        row = table.rows[0]
        assert row["bound_value"] == pytest.approx(confidence_floor_noisy(10, 0.6, 1.0))
        assert 0.0 <= row["halt_probability"] <= 1.0

    def test_sasr_vs_omp_mini(self):
        cfg = ExperimentConfig(
            name="sasr_vs_omp",
            trials=2,
            grid={"sparsity": [8], "noise_power": [1.0]},
            base={
                "signal_length": 200,
                "training_size": 60,
                "testing_size": 20,
                "max_sparsity": 20,
                "accuracy_factor": 0.6,
                "amplitude_scale": 0.08,
            },
            master_seed=4,
        )
        table = run_sasr_vs_omp(cfg)
        row = table.rows[0]
        assert math.isfinite(row["mean_mse"]) and row["mean_mse"] >= 0.0
        assert math.isfinite(row["baseline_mse"])
        assert 0.0 <= row["mean_iterations"] <= 20.0

    def test_single_frame_mini(self):
        cfg = ExperimentConfig(
            name="single_frame",
            trials=1,
            base=dict(
                TRACKING_MINI,
                testing_per_step=10,
                band_count=4,
                detection_threshold=10.0,
            ),
            master_seed=6,
        )
        table = run_single_frame(cfg)
        row = table.rows[0]
        assert row["trial"] == 0
        assert 1 <= row["p_final"] <= 8
        assert row["occupied_bands"] >= 1

    def test_runner_rejects_foreign_config(self):
        with pytest.raises(ParameterError):
            run_phase_transition(_coverage_cfg())


class TestDeterminism:
    def test_same_config_same_bytes(self):
        a = run_interval_coverage(_coverage_cfg())
        b = run_interval_coverage(_coverage_cfg())
        assert a.to_csv_text() == b.to_csv_text()
        assert a.to_json_text() == b.to_json_text()

    def test_worker_count_does_not_change_bytes(self):
        cfg1 = ExperimentConfig(
            name="phase_transition",
            trials=4,
            grid={"measurements": [20], "sparsity": [2]},
            base={"signal_length": 64},
            master_seed=8,
            workers=1,
        )
        cfg2 = ExperimentConfig(**{**cfg1.to_dict(), "workers": 2})
        assert run_phase_transition(cfg1).to_csv_text() == run_phase_transition(cfg2).to_csv_text()


def test_default_config_scales():
    cfg = default_config("halting_probability")
    assert cfg.trials == 2000
    assert cfg.master_seed == 20240001
    small = default_config("single_frame", trials=2)
    assert small.trials == 2
    with pytest.raises(InvalidSpecError):
        default_config("unknown")


def test_run_experiment_writes_output(tmp_path):
    out = tmp_path / "cov.json"
    cfg = _coverage_cfg(output_path=str(out))
    table = run_experiment(cfg)
    assert json.loads(out.read_text())["experiment"] == "interval_coverage"
    csv_out = tmp_path / "cov.csv"
    run_experiment(_coverage_cfg(output_path=str(csv_out)))
    assert csv_out.read_text() == table.to_csv_text()


class TestCli:
    def _write(self, tmp_path, payload, name="cfg.json"):
        path = tmp_path / name
        path.write_text(json.dumps(payload))
        return str(path)

    def test_list_names_every_experiment(self, capsys):
        assert main(["list"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out == list(EXPERIMENT_NAMES)

    def test_run_to_stdout_csv(self, tmp_path, capsys):
        cfg = self._write(tmp_path, _coverage_cfg().to_dict())
        assert main(["run", cfg]) == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0].startswith("confidence_factor,testing_size,")
        assert len(out.splitlines()) == 2

    def test_run_to_file_with_overrides(self, tmp_path, capsys):
        cfg = self._write(tmp_path, _coverage_cfg().to_dict())
        dest = tmp_path / "result.csv"
        assert main(["run", cfg, "--out", str(dest), "--trials", "2", "--seed", "42"]) == 0
        lines = dest.read_text().splitlines()
        header = lines[0].split(",")
        row = lines[1].split(",")
        assert row[header.index("trials")] == "2"

    def test_run_json_format(self, tmp_path, capsys):
        cfg = self._write(tmp_path, _coverage_cfg().to_dict())
        assert main(["run", cfg, "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["experiment"] == "interval_coverage"

    def test_frame_command(self, tmp_path, capsys):
        payload = {
            "frame": dict(DESK_FRAME, testing_per_step=10),
            "halting": {
                "mode": "noiseless",
                "max_sparsity": 48,
                "error_threshold": 1.0,
                "confidence_factor": 0.2,
            },
            "signal": {
                "reference_length": 200,
                "nyquist_hz": 5e9,
                "tones": [[12, 1.0, 0.0], [33, 0.8, 1.1], [57, 1.2, 2.0], [88, 0.9, 0.4]],
            },
            "master_seed": 7,
        }
        cfg = self._write(tmp_path, payload)
        assert main(["frame", cfg]) == 0
        outcome = json.loads(capsys.readouterr().out)
        assert outcome["halted"] is True
        assert outcome["steps_used"] == 2
        # same run, now through --out
        dest = tmp_path / "outcome.json"
        assert main(["frame", cfg, "--out", str(dest)]) == 0
        assert json.loads(dest.read_text())["steps_used"] == 2

    def test_calibrate_lambda_command(self, tmp_path, capsys):
        payload = {
            "frame": dict(DESK_FRAME, testing_per_step=10),
            "halting": {"mode": "noisy", "max_sparsity": 8, "noise_std": 0.5, "accuracy": 0.3},
            "band_count": 4,
            "false_alarm": 0.1,
            "trials": 3,
            "master_seed": 3,
        }
        cfg = self._write(tmp_path, payload)
        assert main(["calibrate-lambda", cfg]) == 0
        assert float(capsys.readouterr().out.strip()) == 1e-12

    def test_config_errors_exit_one(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "absent.json")]) == 1
        assert "config error" in capsys.readouterr().err
        bad = self._write(tmp_path, {"name": "phase_transition", "trials": 1, "grid": {"x": [1]}})
        assert main(["run", bad]) == 1
        missing = self._write(tmp_path, {"frame": dict(DESK_FRAME, testing_per_step=10)}, "f.json")
        assert main(["frame", missing]) == 1

    def test_bad_invocations_exit_one(self, capsys):
        for argv in ([], ["nope"], ["run"]):
            with pytest.raises(SystemExit) as info:
                main(argv)
            assert info.value.code == 1
        assert "error" in capsys.readouterr().err
