"""End-to-end tests of the command-line harness."""

import json

import numpy as np
import pytest

from weakisingsim.cli import build_parser, main, resolve_config
from weakisingsim.experiments import ExperimentRunner
from weakisingsim.export import read_csv, read_json, read_manifest, sha256_file


def _last_error(capsys) -> dict:
    lines = [line for line in capsys.readouterr().err.splitlines() if line.startswith("{")]
    assert lines, "Expected a JSON error object on stderr"
    return json.loads(lines[-1])


def test_analytic_curve_endpoints(tmp_path):
    out = tmp_path / "curve"
    code = main(["analytic", "--curve", "c_eff_uniform", "--lambda-grid", "0:1:11", "--out", str(out)])
    assert code == 0
    header, rows = read_csv(out / "c_eff_uniform.csv")
    assert header[0] == "lambda"
    assert len(rows) == 11
    assert float(rows[0][1]) == 0.5
    assert float(rows[-1][1]) == 0.0

    manifest = read_manifest(out)
    assert manifest["command"] == "analytic"
    assert manifest["config"]["curve"] == "c_eff_uniform"
    for entry in manifest["outputs"]:
        if entry["path"] != "manifest.json":
            assert entry["sha256"] == sha256_file(out / entry["path"])


def test_invalid_lambda_exits_with_two(tmp_path, capsys):
    out = str(tmp_path / "x")
    code = main(["ensemble", "--length", "8", "--lambda", "1.5", "--scheme", "born", "--out", out])
    assert code == 2
    assert _last_error(capsys)["exit_code"] == 2


def test_missing_scheme_exits_with_two(tmp_path, capsys):
    code = main(["ensemble", "--length", "8", "--lambda", "0.5", "--out", str(tmp_path / "x")])
    assert code == 2
    assert _last_error(capsys)["error"] == "ConfigError"


def test_unknown_scheme_is_rejected_by_the_parser(tmp_path, capsys):
    code = main(["ensemble", "--lambda", "0.5", "--scheme", "sideways", "--out", str(tmp_path)])
    assert code == 2
    error = _last_error(capsys)
    assert error["error"] == "ConfigError"
    assert error["exit_code"] == 2
    assert "sideways" in error["message"]


def test_malformed_flag_value_reports_json(tmp_path, capsys):
    code = main(["uniform", "--length", "8", "--lambda", "abc", "--out", str(tmp_path / "x")])
    assert code == 2
    error = _last_error(capsys)
    assert error["error"] == "ConfigError"
    assert "invalid float value" in error["message"]


def test_unknown_command_reports_json(capsys):
    assert main(["teleport"]) == 2
    assert _last_error(capsys)["exit_code"] == 2


@pytest.mark.parametrize(
    "failure",
    [np.linalg.LinAlgError("eigh did not converge"), FloatingPointError("overflow in exp")],
)
def test_numerical_library_errors_exit_with_three(tmp_path, capsys, monkeypatch, failure):
    def fail(self):
        raise failure

    monkeypatch.setattr(ExperimentRunner, "run", fail)
    code = main(["uniform", "--length", "8", "--lambda", "0.3", "--out", str(tmp_path / "x")])
    assert code == 3
    error = _last_error(capsys)
    assert error["error"] == type(failure).__name__
    assert error["exit_code"] == 3


def test_output_collision_is_refused(tmp_path, capsys):
    out = str(tmp_path / "curve")
    args = ["analytic", "--curve", "s_parameter", "--lambda-grid", "0:1:5", "--out", out]
    assert main(args) == 0
    assert main(args) == 2
    assert "not empty" in _last_error(capsys)["message"]


def test_out_of_validity_exits_with_three(tmp_path, capsys):
    code = main(
        [
            "analytic", "--curve", "c_eff_biased", "--delta-p", "0.3",
            "--lambda-grid", "0:0.9:4", "--out", str(tmp_path / "biased"),
        ]
    )
    assert code == 3
    assert _last_error(capsys)["error"] == "OutOfValidityError"


def test_manifest_rerun_is_byte_identical(tmp_path):
    first = tmp_path / "first"
    code = main(
        [
            "ensemble", "--length", "12", "--lambda", "0.4", "--scheme", "born",
            "--trajectories", "4", "--seed", "5", "--threads", "1", "--out", str(first),
        ]
    )
    assert code == 0
    second = tmp_path / "second"
    assert main(["--manifest", str(first / "manifest.json"), "--out", str(second)]) == 0

    for name in ("entropy.csv", "trajectories.jsonl", "fit.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes(), f"{name} differs"
    records = [json.loads(line) for line in (first / "trajectories.jsonl").read_text().splitlines()]
    assert len(records) == 4
    assert all(len(r["outcomes"]) == 12 for r in records)


def test_manifest_rerun_needs_fresh_out(tmp_path, capsys):
    out = tmp_path / "curve"
    args = ["analytic", "--curve", "optimal_bias", "--lambda-grid", "0:1:3", "--out", str(out)]
    assert main(args) == 0
    assert main(["--manifest", str(out)]) == 2
    assert "--out" in _last_error(capsys)["message"]


def test_uniform_command_writes_summary(tmp_path):
    out = tmp_path / "uniform"
    code = main(["uniform", "--length", "32", "--lambda", "0.3", "--sign", "-", "--out", str(out)])
    assert code == 0
    header, rows = read_csv(out / "summary.csv")
    assert header == ["quantity", "fitted", "stderr", "prediction"]
    assert rows[0][0] == "c_eff"
    fits = read_json(out / "fit.json")
    assert fits["c_eff"]["kind"] == "c_eff"
    assert (out / "correlators.csv").exists()


def test_sweep_with_json_tables(tmp_path):
    out = tmp_path / "sweep"
    code = main(
        [
            "sweep", "--length", "16", "--scheme", "forced", "--lambda-grid", "0.2,0.5",
            "--trajectories", "2", "--threads", "1", "--format", "json", "--out", str(out),
        ]
    )
    assert code == 0
    table = read_json(out / "sweep.json")
    assert table["columns"] == ["lambda", "c_eff", "stderr", "prediction"]
    assert [row["lambda"] for row in table["rows"]] == [0.2, 0.5]


def test_oracle_crosscheck(tmp_path):
    out = tmp_path / "oracle"
    assert main(["oracle", "--length", "6", "--lambda", "0.6", "--out", str(out)]) == 0
    report = read_json(out / "report.json")
    assert report["max_deviation"] < 1e-8, report["checks"]
    assert "joint_distribution" in report["checks"]
    assert report["joint_normalization"] < 1e-10


def test_oracle_z_axis(tmp_path):
    out = tmp_path / "oracle_z"
    assert main(["oracle", "--length", "6", "--lambda", "0.5", "--axis", "z", "--out", str(out)]) == 0
    report = read_json(out / "report.json")
    assert report["global_flip_fidelity"] == pytest.approx(1.0, abs=1e-10)
    assert report["half_chain_entropy"] < report["half_chain_entropy_ground"]


def test_oracle_refuses_long_chains(tmp_path):
    code = main(["oracle", "--length", "20", "--lambda", "0.5", "--out", str(tmp_path / "big")])
    assert code == 2


def _yaml_config(tmp_path, body: str):
    path = tmp_path / "config.yaml"
    path.write_text(body)
    return path


def test_yaml_experiment_section_sets_command_parameters(tmp_path, monkeypatch):
    monkeypatch.setenv("WEAKISINGSIM_CONFIG", "")
    path = _yaml_config(
        tmp_path,
        "experiment:\n  length: 10\n  lambda: 0.3\n  trajectories: 7\n  scheme: forced\n"
        "run:\n  verbose: false\n  progress: false\n",
    )
    out = str(tmp_path / "run")

    args = build_parser().parse_args(["ensemble", "--config", str(path), "--out", out])
    config = resolve_config(args)
    assert config.length == 10
    assert config.lam == 0.3
    assert config.trajectories == 7
    assert config.scheme == "forced"

    # flags still win over the YAML section
    args = ["ensemble", "--config", str(path), "--length", "12", "--scheme", "born", "--out", out]
    config = resolve_config(build_parser().parse_args(args))
    assert config.length == 12
    assert config.scheme == "born"
    assert config.lam == 0.3


def test_yaml_experiment_section_rejects_unknown_keys(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("WEAKISINGSIM_CONFIG", "")
    path = _yaml_config(tmp_path, "experiment:\n  lenght: 10\n")
    code = main(["uniform", "--config", str(path), "--lambda", "0.3", "--out", str(tmp_path / "x")])
    assert code == 2
    assert _last_error(capsys)["error"] == "ConfigError"
