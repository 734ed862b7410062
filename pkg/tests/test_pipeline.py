import json
import os

import numpy as np
import pandas as pd
import pytest

from grateid.dataset import assign_groups, split_experiments
from grateid.errors import MissingInput, ValidationError
from grateid.hypertune import HyperSpace
from grateid.ltimodel import load_model
from grateid.pipeline import (
    RunConfig,
    default_initial,
    delta_inputs_for_prediction,
    emit_step_responses,
    fit_proportional_gain,
    format_report,
    parse_initial,
    recompute_metrics,
    run_basic,
    run_comprehensive,
)
from grateid.synth import SynthSpec, generate_synthetic, write_synthetic

SMALL = dict(n_test=3, k=3, budget=4, n_stages=2, pole_choices=[1, 2], n_starts=2)


@pytest.fixture(scope="module")
def basic_csv(tmp_path_factory):
    d = tmp_path_factory.mktemp("basic")
    res = generate_synthetic(SynthSpec(duration=86400.0, n_steps=12, target_r2={"Q_steam": 0.95}))
    return write_synthetic(res, d, "plant")["csv"]


@pytest.fixture(scope="module")
def basic_run(basic_csv, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = RunConfig(data=basic_csv, output_dir=str(out / "a"), **SMALL)
    return cfg, run_basic(cfg)


def _tree(root):
    files = {}
    for dirpath, _, names in os.walk(root):
        for name in names:
            path = os.path.join(dirpath, name)
            with open(path, "rb") as fh:
                files[os.path.relpath(path, root)] = fh.read()
    return files


class TestConfig:
    def test_unknown_key(self):
        with pytest.raises(ValidationError):
            RunConfig.from_dict({"bogus": 1})

    def test_invalid_values(self):
        with pytest.raises(ValidationError):
            RunConfig(coordinates="wrong")
        with pytest.raises(ValidationError):
            RunConfig(budget=0)
        with pytest.raises(ValidationError):
            RunConfig(output="Q_SP")

    def test_relative_paths(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps({"data": "x.csv", "output_dir": "out"}))
        cfg = RunConfig.from_file(p)
        assert cfg.data == str(tmp_path / "x.csv")
        assert cfg.output_dir == str(tmp_path / "out")

    def test_invalid_json(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text("{")
        with pytest.raises(ValidationError):
            RunConfig.from_file(p)


class TestBasicRun:
    def test_artifacts(self, basic_run):
        cfg, result = basic_run
        out = cfg.output_dir
        for name in ("config.json", "split.json", "model.json", "metrics.json", "report.json",
                     "trace.jsonl"):
            assert os.path.exists(os.path.join(out, name))
        trace = [json.loads(line) for line in open(os.path.join(out, "trace.jsonl"))]
        assert len(trace) >= cfg.budget
        model = load_model(os.path.join(out, "model.json"))
        assert model == result["task"].model
        assert "Basic" in format_report(result["report"])

    def test_metrics_recomputable(self, basic_run):
        cfg, _ = basic_run
        metrics = json.load(open(os.path.join(cfg.output_dir, "metrics.json")))
        again = recompute_metrics(os.path.join(cfg.output_dir, "predictions"))
        for group in ("train", "test"):
            for m in ("mse", "r2"):
                assert abs(metrics[group][m] - again[group][m]) <= 1e-9
            assert metrics[group]["n_samples"] == again[group]["n_samples"]

    def test_prediction_matches_model(self, basic_run):
        cfg, result = basic_run
        task = result["task"]
        eset = result["split"]
        i = eset.test[0]
        df = pd.read_csv(os.path.join(cfg.output_dir, "predictions", f"test_{i:03d}.csv"),
                         float_precision="round_trip")
        a, b = eset.windows[i]
        np.testing.assert_allclose(df["y_hat"].to_numpy(), task.prediction[a:b], rtol=0, atol=1e-12)
        assert np.all(df["lower"] <= df["y_hat"]) and np.all(df["y_hat"] <= df["upper"])

    def test_byte_identical_rerun(self, basic_run):
        cfg, _ = basic_run
        again = RunConfig(**{**cfg.to_dict(), "output_dir": cfg.output_dir})
        before = _tree(cfg.output_dir)
        run_basic(again)
        assert _tree(cfg.output_dir) == before

    def test_zero_candidates(self, basic_csv, tmp_path):
        cfg = RunConfig(data=basic_csv, output_dir=str(tmp_path), candidates=[], **SMALL)
        result = run_basic(cfg)
        assert result["task"].model.inputs == ("Q_SP",)

    def test_model_coordinates(self, basic_csv, tmp_path):
        cfg = RunConfig(data=basic_csv, output_dir=str(tmp_path), coordinates="model",
                        **{**SMALL, "budget": 2})
        result = run_basic(cfg)
        assert result["report"]["rows"][0]["estimation"]["r2"] > 0.5

    def test_missing_channel(self, basic_csv, tmp_path):
        cfg = RunConfig(data=basic_csv, output_dir=str(tmp_path), candidates=["nope"], **SMALL)
        with pytest.raises(MissingInput):
            run_basic(cfg)

    def test_step_responses(self, basic_run, tmp_path):
        cfg, result = basic_run
        paths = emit_step_responses(os.path.join(cfg.output_dir, "model.json"), tmp_path,
                                    horizon=20000.0)
        model = result["task"].model
        assert len(paths) == len(model.inputs)
        df = pd.read_csv(paths[0])
        assert df["response"].iloc[-1] == pytest.approx(model.paths[0].gain, rel=1e-2)
        with pytest.raises(ValidationError):
            emit_step_responses(os.path.join(cfg.output_dir, "model.json"), tmp_path,
                                amplitudes=[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0])


class TestDeltaModes:
    def test_rolling_mean_and_zero(self):
        n = 100
        sig = {"a": np.arange(n, dtype=float), "b": np.ones(n)}
        windows = [(0, 40), (40, 100)]
        got = list(delta_inputs_for_prediction(sig, windows, ["a"], "rolling_mean", 10, {}))
        assert got[1][2]["a"][40:].tolist() == [np.mean(np.arange(30, 40))] * 60
        np.testing.assert_array_equal(got[1][2]["a"][:40], np.arange(40))
        assert np.all(got[0][2]["a"] == 0.0)
        zero = list(delta_inputs_for_prediction(sig, windows, ["a"], "zero", 10, {"a": 7.0}))
        assert np.all(zero[1][2]["a"][40:] == 7.0)
        np.testing.assert_array_equal(zero[1][2]["b"], np.ones(100))

    def test_rolling_mean_run(self, basic_csv, tmp_path):
        cfg = RunConfig(data=basic_csv, output_dir=str(tmp_path), delta_mode="rolling_mean",
                        **{**SMALL, "budget": 2})
        result = run_basic(cfg)
        assert np.all(np.isfinite(result["task"].prediction[result["split"].windows[0][0]:]))


def test_initial_points():
    space = HyperSpace(("Q_SP", "H2O"), ("Q_SP",), 2, (1, 2))
    pts = default_initial(space)
    assert len(pts) == 3 and all(space.validate(p) is None for p in pts)
    custom = parse_initial(space, [{"stages": {"H2O": 2}, "poles": {"Q_SP": 2, "H2O": 1}}])
    assert custom[0].stages == (1, 2)


def test_proportional_gain():
    u = np.linspace(1, 2, 50)
    assert fit_proportional_gain(u, 3 * u, [(0, 50)]) == pytest.approx(3.0)
    with pytest.raises(ValidationError):
        fit_proportional_gain(np.zeros(5), np.ones(5), [(0, 5)])


def test_comprehensive_run(tmp_path):
    res = generate_synthetic(SynthSpec(model="comprehensive", duration=86400.0, n_steps=12,
                                       target_r2={"Q_steam": 0.95}))
    csv = write_synthetic(res, tmp_path, "plant")["csv"]
    cfg = RunConfig(data=csv, output_dir=str(tmp_path / "run"), ram_channels=["x_ram"],
                    **{**SMALL, "budget": 2, "pole_choices": [1], "n_starts": 1})
    out = run_comprehensive(cfg)
    assert out["k_p"] == pytest.approx(1.0, rel=0.02)
    assert [r["model"] for r in out["report"]["rows"]][-1] == "Comprehensive"
    assert out["composite_metrics"]["test"]["r2"] > 0.8
    assert "V_Pair" not in out["composite"].external_inputs
    again = recompute_metrics(str(tmp_path / "run" / "composite" / "predictions"))
    assert again["test"]["r2"] == pytest.approx(out["composite_metrics"]["test"]["r2"], abs=1e-9)


def test_split_is_seeded():
    rec = generate_synthetic(SynthSpec(duration=86400.0, n_steps=12)).record
    a = assign_groups(split_experiments(rec, "Q_SP"), 3, 3, 0)
    b = assign_groups(split_experiments(rec, "Q_SP"), 3, 3, 0)
    assert a == b
