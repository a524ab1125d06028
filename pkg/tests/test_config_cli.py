"""Config parsing/validation, experiment artifacts, and the CLI contract."""

import json

import numpy as np
import pytest

from dfrcwave import cli
from dfrcwave.config import (
    ConfigError,
    ExperimentConfig,
    build_problem,
    parse_config_text,
    validate_config,
)
from dfrcwave.experiment import compare_majorizers, iterations_to_within, run_experiment
from dfrcwave.model import load_waveform

TINY_CONFIG = """
# tiny instance, quick to solve
n_tx = 2
n_rx = 2
block_len = 3
k_users = 1
max_lag = 2
gamma_db = [3.0]
grid_step_deg = 15.0
w_bp = 1.0
w_ac = 2.0
w_cc = 2.0
eps3 = 1e-3
max_outer_iters = 40
seed = 9
output_dir = out
"""


class TestParsing:
    def test_round_trip_of_documented_grammar(self):
        cfg = parse_config_text(TINY_CONFIG)
        assert cfg.n_tx == 2
        assert cfg.block_len == 3
        assert cfg.gamma_db == (3.0,)
        assert cfg.output_dir == "out"
        assert cfg.seed == 9

    def test_arrays(self):
        cfg = parse_config_text("target_angles_deg = [-10, 0, 25.5]\n")
        assert cfg.target_angles_deg == (-10.0, 0.0, 25.5)

    def test_comments_and_blanks(self):
        cfg = parse_config_text("\n# comment only\nn_tx = 5  # trailing\n\n")
        assert cfg.n_tx == 5

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config_text("n_ty = 3\n")

    def test_bad_scalar(self):
        with pytest.raises(ConfigError, match="expected int"):
            parse_config_text("n_tx = two\n")

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="key = value"):
            parse_config_text("just a line\n")


class TestValidation:
    def test_desk_preset_is_clean(self):
        assert validate_config(ExperimentConfig.desk_preset()) == []

    def test_full_scale_default_is_clean(self):
        assert validate_config(ExperimentConfig()) == []

    def test_k_exceeding_antennas(self):
        bad = ExperimentConfig.desk_preset(k_users=5)
        report = validate_config(bad)
        assert any("k_users must be <= n_tx" in line for line in report)

    def test_lag_exceeding_block(self):
        bad = ExperimentConfig.desk_preset(max_lag=10)
        report = validate_config(bad)
        assert any("max_lag - 1 must be <= block_len" in line for line in report)

    def test_all_zero_weights(self):
        bad = ExperimentConfig.desk_preset(w_bp=0.0, w_ac=0.0, w_cc=0.0)
        assert any("weights" in line for line in validate_config(bad))

    def test_multiple_violations_all_reported(self):
        bad = ExperimentConfig.desk_preset(k_users=9, max_lag=10, sigma2=-1.0)
        assert len(validate_config(bad)) >= 3

    def test_gamma_broadcast(self):
        cfg = ExperimentConfig.desk_preset()
        assert cfg.gamma_db_per_user == (6.0, 6.0)
        explicit = ExperimentConfig.desk_preset(gamma_db=(3.0, 9.0))
        assert explicit.gamma_db_per_user == (3.0, 9.0)
        wrong = ExperimentConfig.desk_preset(gamma_db=(1.0, 2.0, 3.0))
        assert any("gamma_db" in line for line in validate_config(wrong))


class TestBuildProblem:
    def test_deterministic(self):
        cfg = ExperimentConfig.desk_preset(seed=5)
        a = build_problem(cfg)
        b = build_problem(cfg)
        assert np.array_equal(a.comm.channels, b.comm.channels)
        assert np.array_equal(a.comm.symbols, b.comm.symbols)
        assert np.array_equal(a.x0, b.x0)

    def test_seed_changes_draws(self):
        a = build_problem(ExperimentConfig.desk_preset(seed=5))
        b = build_problem(ExperimentConfig.desk_preset(seed=6))
        assert not np.array_equal(a.comm.channels, b.comm.channels)

    def test_gamma_converted_to_linear(self):
        prob = build_problem(ExperimentConfig.desk_preset())
        assert np.allclose(prob.comm.gamma, 10 ** 0.6)

    def test_invalid_config_raises(self):
        with pytest.raises(ConfigError):
            build_problem(ExperimentConfig.desk_preset(k_users=9))


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY_CONFIG, encoding="utf-8")
    return path


class TestRunExperiment:
    def test_artifacts_written(self, tmp_path):
        cfg = parse_config_text(TINY_CONFIG)
        result = run_experiment(cfg, base_dir=tmp_path)
        out = result.artifact_dir
        for name in (
            "waveform.txt",
            "beampattern.csv",
            "convergence.csv",
            "summary.json",
            "autocorr_q1.csv",
            "autocorr_q2.csv",
            "crosscorr_q1_q2.csv",
            "crosscorr_q2_q1.csv",
        ):
            assert (out / name).exists(), name
        w = load_waveform(out / "waveform.txt")
        assert w.constant_modulus and w.n_tx == 2 and w.block_len == 3
        summary = json.loads((out / "summary.json").read_text())
        assert summary["termination"] in ("converged", "max_iters")
        assert summary["min_ci_margin"] is not None
        assert summary["config"]["seed"] == 9

    def test_autocorr_peaks_at_zero_db(self, tmp_path):
        cfg = parse_config_text(TINY_CONFIG)
        out = run_experiment(cfg, base_dir=tmp_path).artifact_dir
        for name in ("autocorr_q1.csv", "autocorr_q2.csv"):
            rows = (out / name).read_text().strip().splitlines()[1:]
            levels = {int(r.split(",")[0]): float(r.split(",")[1]) for r in rows}
            assert levels[0] == 0.0
            assert max(levels.values()) <= 0.0 + 1e-12

    def test_radar_only_has_null_margin(self, tmp_path):
        cfg = parse_config_text(TINY_CONFIG + "mode = radar_only\n")
        out = run_experiment(cfg, base_dir=tmp_path).artifact_dir
        summary = json.loads((out / "summary.json").read_text())
        assert summary["min_ci_margin"] is None
        assert summary["kkt_residual"] is None

    def test_byte_identical_rerun(self, tmp_path):
        cfg = parse_config_text(TINY_CONFIG)
        first = run_experiment(cfg, base_dir=tmp_path / "a").artifact_dir
        second = run_experiment(cfg, base_dir=tmp_path / "b").artifact_dir
        for name in ("beampattern.csv", "convergence.csv", "waveform.txt",
                     "autocorr_q1.csv", "crosscorr_q1_q2.csv", "summary.json"):
            assert (first / name).read_bytes() == (second / name).read_bytes(), name

    def test_compare_majorizers_writes_both_traces(self, tmp_path):
        cfg = parse_config_text(TINY_CONFIG + "mode = radar_only\n")
        out = compare_majorizers(cfg, base_dir=tmp_path).artifact_dir
        assert (out / "convergence_diagonal.csv").exists()
        assert (out / "convergence_max_eigen.csv").exists()
        summary = json.loads((out / "summary_compare.json").read_text())
        assert set(summary["comparison"]) == {"diagonal", "max_eigen"}


class TestIterationsToWithin:
    def test_monotone_trace(self):
        trace = np.array([10.0, 5.0, 2.0, 1.05, 1.0])
        assert iterations_to_within(trace) == 4

    def test_flat_trace(self):
        assert iterations_to_within(np.array([3.0, 3.0])) == 1

    def test_empty(self):
        assert iterations_to_within(np.array([])) == 0


class TestCLI:
    def test_validate_ok(self, tiny_config, capsys):
        code = cli.main(["validate", str(tiny_config)])
        assert code == 0
        assert "ok" in capsys.readouterr().out

    def test_validate_reports_violations(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text("n_tx = 2\nk_users = 5\n", encoding="utf-8")
        code = cli.main(["validate", str(path)])
        assert code == 1
        assert "k_users" in capsys.readouterr().out

    def test_missing_file_is_config_error(self, tmp_path):
        assert cli.main(["validate", str(tmp_path / "nope.cfg")]) == 1

    def test_parse_error_is_config_error(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text("n_tx = banana\n", encoding="utf-8")
        assert cli.main(["run", str(path)]) == 1

    def test_run_writes_artifacts(self, tiny_config, tmp_path, capsys):
        code = cli.main(
            ["run", str(tiny_config), "--output-root", str(tmp_path / "arts")]
        )
        assert code == 0
        assert (tmp_path / "arts" / "out" / "summary.json").exists()

    def test_env_var_output_root(self, tiny_config, tmp_path, monkeypatch):
        monkeypatch.setenv("DFRCWAVE_OUTPUT_ROOT", str(tmp_path / "env_root"))
        code = cli.main(["run", str(tiny_config)])
        assert code == 0
        assert (tmp_path / "env_root" / "out" / "summary.json").exists()

    def test_warning_exit_code(self, tmp_path):
        # unreachable QoS downgrades the run to completed-with-warnings
        path = tmp_path / "warn.cfg"
        path.write_text(
            TINY_CONFIG + "gamma_db = [90.0]\nmax_outer_iters = 3\n",
            encoding="utf-8",
        )
        code = cli.main(["run", str(path), "--output-root", str(tmp_path)])
        assert code == 3

    def test_compare_subcommand(self, tmp_path):
        path = tmp_path / "cmp.cfg"
        path.write_text(TINY_CONFIG + "mode = radar_only\n", encoding="utf-8")
        code = cli.main(
            ["compare-majorizers", str(path), "--output-root", str(tmp_path / "c")]
        )
        assert code == 0
        assert (tmp_path / "c" / "out" / "convergence_max_eigen.csv").exists()
