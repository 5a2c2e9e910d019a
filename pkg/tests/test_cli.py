import json

import pytest

from nfipp.cli import build_parser, main

SUBCOMMANDS = ("toy-validate", "make-fixtures", "train", "forecast", "evaluate", "run-protocol")


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    config = root / "config.json"
    config.write_text(json.dumps({
        "schema_version": 1,
        "protocol": {"eval_start": 2000, "eval_end": 2001, "hidden_layer_sizes": [8]},
        "train": {"epochs": 60},
        "toy": {"T": 120, "hidden_layer_sizes": [4]},
    }))
    assert main(["make-fixtures", "--seed", "2", "--countries", "AFG", "--out-dir", str(root / "data")]) == 0
    return root, config


@pytest.mark.parametrize("command", SUBCOMMANDS)
def test_common_options(command):
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices[command]
    flags = {s for a in sub._actions for s in a.option_strings}
    assert {"--config", "--seed", "--out-dir"} <= flags


def test_make_fixtures_is_deterministic(workspace, tmp_path):
    root, _ = workspace
    assert main(["make-fixtures", "--seed", "2", "--countries", "AFG", "--out-dir", str(tmp_path)]) == 0
    for name in ("events.csv", "floods_droughts.csv", "temperature.csv"):
        assert (tmp_path / name).read_bytes() == (root / "data" / name).read_bytes()


def test_train_forecast_evaluate(workspace, tmp_path, capsys):
    root, config = workspace
    data = str(root / "data")
    assert main(["train", "--config", str(config), "--data-dir", data, "--country", "AFG",
                 "--train-start", "1994", "--train-end", "1999", "--out-dir", str(tmp_path)]) == 0
    model = tmp_path / "model_AFG_terror_climate.json"
    assert model.exists()
    assert main(["forecast", "--data-dir", data, "--model", str(model), "--year", "2000",
                 "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "forecast_AFG_terror_climate_2000.csv").exists()


def test_run_protocol_then_evaluate(workspace, tmp_path, capsys):
    root, config = workspace
    data = str(root / "data")
    assert main(["run-protocol", "--config", str(config), "--seed", "1", "--data-dir", data,
                 "--out-dir", str(tmp_path / "p")]) == 0
    assert "AFG:" in capsys.readouterr().out
    assert main(["evaluate", "--config", str(config), "--seed", "1", "--data-dir", data,
                 "--forecasts", str(tmp_path / "p" / "forecasts.csv"), "--out-dir", str(tmp_path / "e")]) == 0
    assert (tmp_path / "e" / "report.json").read_bytes() == (tmp_path / "p" / "report.json").read_bytes()


def test_toy_validate(workspace, tmp_path):
    _, config = workspace
    assert main(["toy-validate", "--config", str(config), "--seed", "0", "--levels", "0.5,2",
                 "--trials", "2", "--out-dir", str(tmp_path)]) == 0
    lines = (tmp_path / "benchmark.csv").read_text().splitlines()
    assert len(lines) == 3


def test_validation_errors_exit_2(workspace, tmp_path):
    _, config = workspace
    short = tmp_path / "short"
    fixture_cfg = tmp_path / "f.json"
    fixture_cfg.write_text(json.dumps({"schema_version": 1, "fixtures": {"start": "1996-01-01"}}))
    assert main(["make-fixtures", "--config", str(fixture_cfg), "--countries", "AFG", "--out-dir", str(short)]) == 0
    assert main(["run-protocol", "--config", str(config), "--data-dir", str(short),
                 "--out-dir", str(tmp_path / "o")]) == 2
    findings = json.loads((tmp_path / "o" / "findings.json").read_text())
    assert findings and all(f["code"] == "coverage_gap" for f in findings)


def test_bad_config_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 99}))
    assert main(["make-fixtures", "--config", str(bad), "--out-dir", str(tmp_path)]) == 2


def test_missing_input_exit_3(tmp_path):
    assert main(["run-protocol", "--data-dir", str(tmp_path / "nope"), "--countries", "AFG",
                 "--out-dir", str(tmp_path / "o")]) == 3
    assert main(["make-fixtures", "--config", str(tmp_path / "missing.json"), "--out-dir", str(tmp_path)]) == 3
