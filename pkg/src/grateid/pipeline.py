"""End-to-end identification runs: ingest, split, tune, fit, evaluate, write artifacts.

Every artifact is a deterministic function of the configuration and its master
seed. Reports hold no timestamps so reruns are byte-identical.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .dataset import ExperimentSet, Record, Standardizer, assign_groups, read_csv, split_experiments
from .errors import MissingInput, NoCovariance, ValidationError
from .estimator import FitObjective, IdentData, mse, r_squared, staged_fit
from .hypertune import HyperParams, HyperSpace, kfold_objective, tune
from .ltimodel import (
    MisoModel,
    chain_subprocesses,
    dumps_model,
    loads_model_file,
    output_confidence_band,
    simulate,
    step_response,
)
from .plant import VariableConvention, ram_to_fuel_flow
from .zoo import fuel_flow_link, gamma_link, mass_flow_link

log = logging.getLogger("grateid")

DELTA_INPUTS = ("T_Pair", "H2O", "CO2", "O2")

DEFAULT_SUBPROCESSES = {
    "V_Pair": {"mandatory": ["Q_SP"], "candidates": list(DELTA_INPUTS)},
    "V_Sair": {"mandatory": ["Q_SP"], "candidates": list(DELTA_INPUTS)},
    "T_furn": {"mandatory": ["V_Pair", "V_Sair", "Q_SP"], "candidates": list(DELTA_INPUTS)},
    "Q_steam": {"mandatory": ["T_furn", "m_furn"], "candidates": ["Gamma"]},
}


@dataclass
class RunConfig:
    """Declarative run description, loaded from JSON."""

    data: str | None = None
    column_map: dict = field(default_factory=dict)
    time_column: str = "time"
    units: dict = field(default_factory=dict)
    output: str = "Q_steam"
    mandatory: list = field(default_factory=lambda: ["Q_SP"])
    candidates: list = field(default_factory=lambda: list(DELTA_INPUTS))
    setpoint: str = "Q_SP"
    lead_time: float = 600.0
    threshold: float = 0.02
    n_test: int = 7
    k: int = 5
    seed: int = 0
    budget: int = 300
    n_stages: int = 3
    pole_choices: list = field(default_factory=lambda: [1, 2, 3])
    lam_bounds: list = field(default_factory=lambda: [1e-6, 1e2])
    tune_lambda: bool = True
    initial: list | None = None
    n_starts: int = 5
    max_iter: int = 500
    coordinates: str = "standardized"
    delta_inputs: list = field(default_factory=lambda: list(DELTA_INPUTS))
    delta_mode: str = "measured"
    delta_window: float = 3600.0
    band_level: float = 0.95
    ram_channels: list = field(default_factory=list)
    ram_area: float = 1.0
    min_stroke: float = 0.1
    subprocesses: dict = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_SUBPROCESSES)))
    convention: dict = field(default_factory=dict)
    output_dir: str = "run"

    def __post_init__(self):
        if self.coordinates not in ("standardized", "model"):
            raise ValidationError("coordinates must be 'standardized' or 'model'")
        if self.delta_mode not in ("measured", "rolling_mean", "zero"):
            raise ValidationError("delta_mode must be 'measured', 'rolling_mean' or 'zero'")
        if self.budget < 1:
            raise ValidationError("budget must be at least 1")
        if self.output in self.mandatory or self.output in self.candidates:
            raise ValidationError("the target cannot be one of its own inputs")

    @classmethod
    def from_dict(cls, d: Mapping, base_dir: str | None = None) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ValidationError(f"unknown config keys: {unknown}")
        cfg = cls(**dict(d))
        if base_dir:
            if cfg.data and not os.path.isabs(cfg.data):
                cfg.data = os.path.join(base_dir, cfg.data)
            if not os.path.isabs(cfg.output_dir):
                cfg.output_dir = os.path.join(base_dir, cfg.output_dir)
        return cfg

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(d, os.path.dirname(os.path.abspath(path)))

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# Helpers

def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(path, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)


def load_record(cfg: RunConfig) -> Record:
    if not cfg.data:
        raise ValidationError("config has no data path")
    return read_csv(cfg.data, cfg.column_map, cfg.time_column, cfg.units)


def make_split(record: Record, cfg: RunConfig) -> ExperimentSet:
    eset = split_experiments(record, cfg.setpoint, cfg.lead_time, cfg.threshold)
    return assign_groups(eset, cfg.n_test, cfg.k, cfg.seed)


def _require(record_or_signals, names, what):
    missing = [n for n in names if n not in record_or_signals]
    if missing:
        raise MissingInput(f"{what} needs channels {missing}")


def default_initial(space: HyperSpace) -> list[HyperParams]:
    """Educated guesses: mandatory inputs alone, then every input with one and with two poles."""
    lam = [space.lam_bounds[0]] * space.n_stages
    everything = {n: 1 for n in space.inputs}
    guesses = [space.make({}, {}, lam),
               space.make(everything, {n: space.pole_choices[0] for n in space.inputs}, lam)]
    if 2 in space.pole_choices:
        guesses.append(space.make(everything, {n: 2 for n in space.inputs}, lam))
    return guesses


def parse_initial(space: HyperSpace, entries) -> list[HyperParams]:
    out = []
    for e in entries:
        lams = e.get("lambda", [space.lam_bounds[0]] * space.n_stages)
        out.append(space.make(e.get("stages", {}), e.get("poles", {}), lams))
    return out


def delta_inputs_for_prediction(signals: Mapping[str, np.ndarray], windows, names,
                                mode: str, window_samples: int, zero_level: Mapping[str, float]):
    """Per-window input sets for multistep prediction.

    Yields ``(a, b, signals)`` where the ``names`` channels are replaced on
    ``[a, b)`` by the mean of the preceding ``window_samples`` samples
    (``rolling_mean``) or by ``zero_level`` (``zero``).
    """
    for a, b in windows:
        sig = dict(signals)
        for name in names:
            if name not in sig:
                continue
            x = np.array(sig[name][:b], dtype=float)
            if mode == "rolling_mean":
                past = x[max(0, a - window_samples):a]
                x[a:b] = past.mean() if len(past) else x[a]
            else:
                x[a:b] = zero_level.get(name, 0.0)
            sig[name] = x
        yield a, b, {k: np.asarray(v)[:b] for k, v in sig.items()}


def _metrics_block(y_std: np.ndarray, yhat_std: np.ndarray, windows) -> dict:
    y = np.concatenate([y_std[a:b] for a, b in windows])
    yh = np.concatenate([yhat_std[a:b] for a, b in windows])
    return {"mse": mse(y, yh), "r2": r_squared(y, yh), "n_samples": int(len(y))}


# ---------------------------------------------------------------------------
# One identification task (one output)

@dataclass
class TaskResult:
    output: str
    model: MisoModel
    eta: HyperParams
    J: float
    space: HyperSpace
    trace: list
    metrics: dict
    prediction: np.ndarray
    band: tuple | None


def _space(cfg: RunConfig, mandatory, candidates) -> HyperSpace:
    return HyperSpace(tuple(mandatory) + tuple(c for c in candidates if c not in mandatory),
                      tuple(mandatory), cfg.n_stages, tuple(cfg.pole_choices),
                      tuple(cfg.lam_bounds), cfg.tune_lambda)


def predict_output(model: MisoModel, signals, eset: ExperimentSet, dt: float, cfg: RunConfig,
                   zero_level: Mapping[str, float], with_band: bool = True):
    """Model prediction over the record (and band) under the configured delta mode."""
    n = len(next(iter(signals.values())))
    deltas = [d for d in cfg.delta_inputs if d in model.inputs]
    band = None
    if cfg.delta_mode == "measured" or not deltas:
        y_hat = simulate(model, signals, dt, "steady").values
        if with_band and model.covariance is not None:
            lo, hi = output_confidence_band(model, signals, dt, cfg.band_level, "steady")
            band = (lo.values, hi.values)
        return y_hat, band
    y_hat = np.full(n, np.nan)
    lower = np.full(n, np.nan)
    upper = np.full(n, np.nan)
    w = int(round(cfg.delta_window / dt))
    for a, b, sig in delta_inputs_for_prediction(signals, eset.windows, deltas, cfg.delta_mode,
                                                 w, zero_level):
        y_hat[a:b] = simulate(model, sig, dt, "steady").values[a:b]
        if with_band and model.covariance is not None:
            lo, hi = output_confidence_band(model, sig, dt, cfg.band_level, "steady")
            lower[a:b], upper[a:b] = lo.values[a:b], hi.values[a:b]
    if with_band and model.covariance is not None:
        band = (lower, upper)
    return y_hat, band


def identify(signals: Mapping[str, np.ndarray], output: str, mandatory, candidates,
             eset: ExperimentSet, dt: float, cfg: RunConfig, out_stats: Standardizer,
             trace_path: str | None = None, zero_level: Mapping[str, float] | None = None
             ) -> TaskResult:
    """Tune, fit on all training experiments and evaluate one output."""
    _require(signals, [output, *mandatory, *candidates], f"the {output} identification")
    space = _space(cfg, mandatory, candidates)
    data = IdentData(signals, output, dt, eset.select(eset.train))
    cv_obj = FitObjective(n_starts=cfg.n_starts, max_iter=cfg.max_iter, covariance=False)
    initial = (parse_initial(space, cfg.initial) if cfg.initial is not None
               else default_initial(space))

    trace_fh = open(trace_path, "w") if trace_path else None

    def record(entry):
        log.info("%s it %d J=%s feasible=%s best=%s", output, entry["iteration"], entry["J"],
                 entry["feasible"], entry["incumbent_J"])
        if trace_fh:
            trace_fh.write(json.dumps(entry, sort_keys=True) + "\n")

    try:
        result = tune(space, lambda eta: kfold_objective(eta, space, data, eset, cv_obj),
                      cfg.budget, cfg.seed, initial, record, stream=f"bo.{output}")
    finally:
        if trace_fh:
            trace_fh.close()
    final = staged_fit(space.to_stages(result.best), data,
                       FitObjective(n_starts=cfg.n_starts, max_iter=cfg.max_iter))
    model = final.model
    y_hat, band = predict_output(model, signals, eset, dt, cfg, zero_level or {})
    metrics = evaluation_metrics(signals[output], y_hat, eset, out_stats, output)
    metrics.update({"output": output, "J": result.best_J,
                    "hyperparameters": result.best.to_dict(space),
                    "evaluations": len(result.observations),
                    "delta_mode": cfg.delta_mode})
    return TaskResult(output, model, result.best, result.best_J, space, result.trace, metrics,
                      y_hat, band)


def evaluation_metrics(y, y_hat, eset: ExperimentSet, stats: Standardizer, name: str) -> dict:
    """Pooled train/test MSE and R^2 in standardized units, plus per-experiment values."""
    ys = (np.asarray(y) - stats.mean[name]) / stats.range[name]
    yhs = (np.asarray(y_hat) - stats.mean[name]) / stats.range[name]
    out = {"train": _metrics_block(ys, yhs, eset.select(eset.train))}
    if eset.test:
        out["test"] = _metrics_block(ys, yhs, eset.select(eset.test))
    per = []
    for i, (a, b) in enumerate(eset.windows):
        if eset.groups[i] is None:
            continue
        try:
            r2 = r_squared(ys[a:b], yhs[a:b])
        except ValidationError:
            r2 = None
        per.append({"index": i, "group": eset.groups[i], "fold": eset.folds[i],
                    "mse": mse(ys[a:b], yhs[a:b]), "r2": r2})
    out["experiments"] = per
    return out


def write_predictions(directory, t, y, y_hat, band, eset: ExperimentSet, stats: Standardizer,
                      name: str, to_physical) -> None:
    """One CSV per experiment with standardized and physical measurement, prediction and band."""
    os.makedirs(directory, exist_ok=True)
    for i, (a, b) in enumerate(eset.windows):
        if eset.groups[i] is None:
            continue
        cols = {"time": t[a:b]}
        std = lambda v: (np.asarray(v[a:b]) - stats.mean[name]) / stats.range[name]  # noqa: E731
        cols["y"] = std(y)
        cols["y_hat"] = std(y_hat)
        if band is not None:
            cols["lower"] = std(band[0])
            cols["upper"] = std(band[1])
        cols["y_phys"] = to_physical(np.asarray(y[a:b]))
        cols["y_hat_phys"] = to_physical(np.asarray(y_hat[a:b]))
        if band is not None:
            cols["lower_phys"] = to_physical(np.asarray(band[0][a:b]))
            cols["upper_phys"] = to_physical(np.asarray(band[1][a:b]))
        pd.DataFrame(cols).to_csv(os.path.join(directory, f"{eset.groups[i]}_{i:03d}.csv"),
                                  index=False, float_format="%.17g")


def _task_artifacts(task: TaskResult, directory, record_t, signals, eset, stats, to_physical,
                    convention=None, model_extra=None):
    extra = {"hyperparameters": task.eta.to_dict(task.space), "J": task.J}
    extra.update(model_extra or {})
    _write(os.path.join(directory, "model.json"), dumps_model(task.model, convention, extra))
    _write(os.path.join(directory, "metrics.json"), _dumps(task.metrics))
    write_predictions(os.path.join(directory, "predictions"), record_t, signals[task.output],
                      task.prediction, task.band, eset, stats, task.output, to_physical)


def _summary_row(label, metrics) -> dict:
    row = {"model": label, "estimation": {k: metrics["train"][k] for k in ("mse", "r2")}}
    if "test" in metrics:
        row["validation"] = {k: metrics["test"][k] for k in ("mse", "r2")}
    return row


# ---------------------------------------------------------------------------
# Basic model

def run_basic(cfg: RunConfig, record: Record | None = None) -> dict:
    """Single identification of the target from the mandatory and candidate inputs."""
    record = record if record is not None else load_record(cfg)
    names = [cfg.output, *cfg.mandatory, *cfg.candidates]
    _require(record, [cfg.setpoint, *names], "the basic run")
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    _write(os.path.join(out, "config.json"), _dumps(cfg.to_dict()))
    eset = make_split(record, cfg)
    _write(os.path.join(out, "split.json"), _dumps(eset.to_dict()))
    train_w = eset.select(eset.train)
    dt = record.sample_period

    if cfg.coordinates == "standardized":
        stats = Standardizer.fit(record, train_w, names)
        signals = {n: stats.apply(record.select([n]))[n] for n in names}
        out_stats = Standardizer({cfg.output: 0.0}, {cfg.output: 1.0})

        def to_physical(v):
            return stats.invert(cfg.output, v)
        model_extra = {"standardizer": stats.to_dict()}
        convention = None
    else:
        convention = VariableConvention.from_dict(cfg.convention)
        signals = {n: convention.physical_to_model(n, record[n]) for n in names}
        out_stats = Standardizer.fit(Record.from_arrays({cfg.output: signals[cfg.output]}, dt),
                                     train_w)

        def to_physical(v):
            return convention.model_to_physical(cfg.output, v)
        model_extra = {}

    zero_level = {n: float(np.mean(np.concatenate([signals[n][a:b] for a, b in train_w])))
                  for n in names}
    task = identify(signals, cfg.output, cfg.mandatory, cfg.candidates, eset, dt, cfg,
                    out_stats, os.path.join(out, "trace.jsonl"), zero_level)
    _task_artifacts(task, out, record.time, signals, eset, out_stats, to_physical, convention,
                    model_extra)
    report = {"rows": [_summary_row("Basic", task.metrics)], "seed": cfg.seed}
    _write(os.path.join(out, "report.json"), _dumps(report))
    return {"task": task, "split": eset, "report": report}


# ---------------------------------------------------------------------------
# Comprehensive model

def fit_proportional_gain(u, v, windows) -> float:
    """Least-squares ``K`` of ``v = K u`` over the given windows."""
    uu = np.concatenate([np.asarray(u)[a:b] for a, b in windows])
    vv = np.concatenate([np.asarray(v)[a:b] for a, b in windows])
    den = float(uu @ uu)
    if den == 0:
        raise ValidationError("proportional gain undefined for an all-zero input")
    return float(uu @ vv) / den


def comprehensive_signals(record: Record, cfg: RunConfig, conv: VariableConvention) -> dict:
    """Model-coordinate channels plus the derived fuel flow, flue gas mass flow and Gamma."""
    base = ["Q_SP", "Q_steam", "V_Pair", "V_Sair", "T_furn", "H2O", "O2", "CO2"]
    _require(record, base, "the comprehensive run")
    signals = {n: conv.physical_to_model(n, record[n]) for n in record.names
               if n in conv and n not in ("m_furn", "Gamma", "V_waste")}
    ram = [c for c in cfg.ram_channels if c in record]
    if cfg.ram_channels:
        _require(record, cfg.ram_channels, "the ram feeder transform")
        flow = ram_to_fuel_flow([record.channels[c] for c in ram], cfg.ram_area, cfg.min_stroke)
        signals["V_waste"] = conv.physical_to_model("V_waste", flow.values)
    elif "V_waste" in record:
        signals["V_waste"] = conv.physical_to_model("V_waste", record["V_waste"])
    signals["m_furn"] = mass_flow_link(conv).func(
        **{k: signals[k] for k in ("V_Pair", "V_Sair", "H2O", "O2", "CO2")})
    signals["Gamma"] = gamma_link(conv).func(T_furn=signals["T_furn"], m_furn=signals["m_furn"])
    return signals


def run_comprehensive(cfg: RunConfig, record: Record | None = None) -> dict:
    """Subprocess identifications chained through the algebraic links."""
    record = record if record is not None else load_record(cfg)
    conv = VariableConvention.from_dict(cfg.convention)
    signals = comprehensive_signals(record, cfg, conv)
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    _write(os.path.join(out, "config.json"), _dumps(cfg.to_dict()))
    eset = make_split(record, cfg)
    _write(os.path.join(out, "split.json"), _dumps(eset.to_dict()))
    train_w = eset.select(eset.train)
    dt = record.sample_period

    k_p = None
    if "V_waste" in signals:
        k_p = fit_proportional_gain(signals["Q_SP"], signals["V_waste"], train_w)
        _write(os.path.join(out, "fuel_flow.json"), _dumps({"k_p": k_p}))

    tasks = {}
    rows = []
    zero_level = {n: float(np.mean(np.concatenate([v[a:b] for a, b in train_w])))
                  for n, v in signals.items()}
    for output, menu in cfg.subprocesses.items():
        stats = Standardizer.fit(Record.from_arrays({output: signals[output]}, dt), train_w)
        task = identify(signals, output, menu["mandatory"], menu.get("candidates", []), eset,
                        dt, cfg, stats, None, zero_level)
        sub = os.path.join(out, output)
        os.makedirs(sub, exist_ok=True)
        with open(os.path.join(sub, "trace.jsonl"), "w") as fh:
            for entry in task.trace:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
        _task_artifacts(task, sub, record.time, signals, eset, stats,
                        lambda v, o=output: conv.model_to_physical(o, v), conv)
        tasks[output] = task
        rows.append(_summary_row(f"Subprocess {output}", task.metrics))

    # complete chain driven by the external measurements only
    links = [mass_flow_link(conv), gamma_link(conv)]
    if k_p is not None:
        links.insert(0, fuel_flow_link(k_p))
    composite = chain_subprocesses([t.model for t in tasks.values()], links)
    ext = {n: signals[n] for n in composite.external_inputs}
    target = list(cfg.subprocesses)[-1]
    y_hat = _composite_prediction(composite, ext, eset, dt, cfg, zero_level)[target]
    stats = Standardizer.fit(Record.from_arrays({target: signals[target]}, dt), train_w)
    comp_metrics = evaluation_metrics(signals[target], y_hat, eset, stats, target)
    comp_metrics.update({"output": target, "delta_mode": cfg.delta_mode,
                         "external_inputs": composite.external_inputs})
    cdir = os.path.join(out, "composite")
    _write(os.path.join(cdir, "metrics.json"), _dumps(comp_metrics))
    write_predictions(os.path.join(cdir, "predictions"), record.time, signals[target], y_hat,
                      None, eset, stats, target, lambda v: conv.model_to_physical(target, v))
    rows.append(_summary_row("Comprehensive", comp_metrics))
    report = {"rows": rows, "seed": cfg.seed, "k_p": k_p}
    _write(os.path.join(out, "report.json"), _dumps(report))
    return {"tasks": tasks, "composite": composite, "composite_metrics": comp_metrics,
            "k_p": k_p, "split": eset, "report": report, "signals": signals}


def _composite_prediction(composite, ext, eset, dt, cfg, zero_level):
    if cfg.delta_mode == "measured":
        return composite.evaluate(ext, dt, initial_state="steady")
    n = len(next(iter(ext.values())))
    outs = {}
    w = int(round(cfg.delta_window / dt))
    for a, b, sig in delta_inputs_for_prediction(ext, eset.windows, cfg.delta_inputs,
                                                 cfg.delta_mode, w, zero_level):
        env = composite.evaluate(sig, dt, initial_state="steady")
        for k, v in env.items():
            outs.setdefault(k, np.full(n, np.nan))[a:b] = v[a:b]
    return outs


# ---------------------------------------------------------------------------
# Step responses and reports

def emit_step_responses(model_file, directory, inputs: Sequence[str] | None = None,
                        amplitudes: Sequence[float] | float = 1.0, horizon: float = 36000.0,
                        sample_period: float = 5.0, level: float = 0.95) -> list[str]:
    """Write ``step_<output>_<input>.csv`` for each requested input of a saved model."""
    with open(model_file) as fh:
        model, _ = loads_model_file(fh.read())
    inputs = list(inputs) if inputs else list(model.inputs)
    amps = list(amplitudes) if np.ndim(amplitudes) else [float(amplitudes)] * len(inputs)
    if len(amps) != len(inputs):
        raise ValidationError("one amplitude per input is required")
    os.makedirs(directory, exist_ok=True)
    paths = []
    for name, amp in zip(inputs, amps):
        resp = step_response(model, name, amp, horizon, sample_period)
        cols = {"time": np.arange(len(resp)) * sample_period, "response": resp.values}
        if model.covariance is not None:
            n = len(resp)
            sig = {i: np.zeros(n) for i in model.inputs}
            sig[name] = np.full(n, float(amp))
            try:
                lo, hi = output_confidence_band(model, sig, sample_period, level)
                cols["lower"], cols["upper"] = lo.values, hi.values
            except NoCovariance:
                pass
        path = os.path.join(directory, f"step_{model.output}_{name}.csv")
        pd.DataFrame(cols).to_csv(path, index=False, float_format="%.17g")
        paths.append(path)
    return paths


def recompute_metrics(prediction_dir) -> dict:
    """Pooled MSE and R^2 per group recomputed from the prediction CSVs."""
    groups: dict[str, list] = {}
    for fname in sorted(os.listdir(prediction_dir)):
        if not fname.endswith(".csv"):
            continue
        df = pd.read_csv(os.path.join(prediction_dir, fname), float_precision="round_trip")
        groups.setdefault(fname.split("_")[0], []).append(df)
    out = {}
    for g, frames in groups.items():
        y = np.concatenate([f["y"].to_numpy() for f in frames])
        yh = np.concatenate([f["y_hat"].to_numpy() for f in frames])
        out[g] = {"mse": mse(y, yh), "r2": r_squared(y, yh), "n_samples": int(len(y))}
    return out


def format_report(report: Mapping) -> str:
    lines = [f"{'model':<24}{'MSE est.':>12}{'R2 est.':>10}{'MSE val.':>12}{'R2 val.':>10}"]
    for row in report["rows"]:
        e = row["estimation"]
        v = row.get("validation", {"mse": float("nan"), "r2": float("nan")})
        lines.append(f"{row['model']:<24}{e['mse']:>12.5f}{100 * e['r2']:>9.2f}%"
                     f"{v['mse']:>12.5f}{100 * v['r2']:>9.2f}%")
    return "\n".join(lines)
