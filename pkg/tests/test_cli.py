import json
import os
import subprocess
import sys

import pandas as pd
import pytest

from grateid.cli import main


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--duration", "86400", "--n-steps", "12", "--target-r2", "0.95",
                 "--out", str(d), "--name", "plant"]) == 0
    cfg = {"data": "plant.csv", "n_test": 3, "k": 3, "budget": 3, "n_stages": 2,
           "pole_choices": [1], "n_starts": 1, "output_dir": "run"}
    (d / "cfg.json").write_text(json.dumps(cfg))
    return d


def test_synth_files(workdir):
    assert len(pd.read_csv(workdir / "plant.csv")) == 17280
    truth = json.loads((workdir / "plant_truth.json").read_text())
    assert truth["model"] == "basic"
    assert truth["noise_std"]["Q_steam"] > 0


def test_ingest_check(workdir, capsys):
    assert main(["ingest-check", str(workdir / "cfg.json")]) == 0
    out = capsys.readouterr().out
    assert "17280 samples" in out and "13 experiments" in out


def test_run_report_step(workdir, capsys):
    assert main(["run-basic", str(workdir / "cfg.json"), "--budget", "2"]) == 0
    assert "Basic" in capsys.readouterr().out
    run = workdir / "run"
    assert main(["report", str(run), "--verify"]) == 0
    assert "metrics match" in capsys.readouterr().out
    assert main(["step-response", str(run / "model.json"), "--out", str(workdir / "steps"),
                 "--horizon", "3600"]) == 0
    assert os.path.exists(workdir / "steps" / "step_Q_steam_Q_SP.csv")


def test_verify_detects_tampering(workdir, capsys):
    run = workdir / "run2"
    assert main(["run-basic", str(workdir / "cfg.json"), "--budget", "1", "--out", str(run)]) == 0
    pred = run / "predictions"
    name = sorted(p for p in os.listdir(pred) if p.startswith("test"))[0]
    df = pd.read_csv(pred / name, float_precision="round_trip")
    df["y_hat"] += 0.01
    df.to_csv(pred / name, index=False, float_format="%.17g")
    assert main(["report", str(run), "--verify"]) == 2
    assert "disagree" in capsys.readouterr().err


def test_validation_errors_exit_1(workdir, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"bogus": 1}))
    assert main(["run-basic", str(bad)]) == 1
    assert main(["ingest-check", str(tmp_path / "missing.json")]) == 1
    cfg = json.loads((workdir / "cfg.json").read_text())
    cfg["data"] = str(workdir / "plant.csv")
    cfg["candidates"] = ["nope"]
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps(cfg))
    assert main(["ingest-check", str(wrong)]) == 1
    assert "nope" in capsys.readouterr().err


def test_synth_bad_spec(tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"no_such_field": 1}))
    assert main(["synth", "--spec", str(spec), "--out", str(tmp_path)]) == 1


def test_console_entry_point(workdir):
    proc = subprocess.run([sys.executable, "-m", "grateid.cli", "report", str(workdir / "nowhere")],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    assert proc.stderr.startswith("error:")
