"""Synthetic plant records generated from the reference models.

Stands in for proprietary plant data: a setpoint step program plus
Gauss-Markov disturbances on the additional inputs drive a zoo model (or the
chained subprocess composite) from steady state; seeded white noise is added to the measured
outputs, scaled in standardized units.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.signal import lfilter

from ._rng import substream
from .dataset import Record, write_csv
from .ltimodel import MisoModel, model_to_dict, simulate
from .plant import VariableConvention
from .zoo import ZOO, comprehensive_composite

DEFAULT_DISTURBANCES = {
    # name: (std in dimensionless units, correlation time in s)
    "T_Pair": (0.01, 3600.0),
    "H2O": (0.01, 900.0),
    "CO2": (0.006, 1800.0),
    "O2": (0.006, 600.0),
}


@dataclass
class SynthSpec:
    model: str = "basic"
    duration: float = 2 * 86400.0
    sample_period: float = 5.0
    n_steps: int = 26
    setpoint_levels: tuple[float, float] = (0.65, 1.0)
    min_step: float = 0.05
    setpoint_mode: str = "alternating"
    disturbances: dict = field(default_factory=lambda: dict(DEFAULT_DISTURBANCES))
    noise_std: dict = field(default_factory=dict)
    target_r2: dict = field(default_factory=dict)
    k_p: float = 1.0
    fuel_noise_std: float = 0.02
    ram_period: float = 60.0
    seed: int = 0

    @classmethod
    def from_dict(cls, d) -> "SynthSpec":
        d = dict(d)
        if "setpoint_levels" in d:
            d["setpoint_levels"] = tuple(d["setpoint_levels"])
        if "disturbances" in d:
            d["disturbances"] = {k: tuple(v) for k, v in d["disturbances"].items()}
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["disturbances"] = {k: list(v) for k, v in self.disturbances.items()}
        d["setpoint_levels"] = list(self.setpoint_levels)
        return d


@dataclass
class SynthResult:
    record: Record                      # physical units, CSV-ready
    signals: dict[str, np.ndarray]      # model coordinates, measured (noisy)
    clean: dict[str, np.ndarray]        # model coordinates, noiseless
    noise_std: dict[str, float]         # per output, standardized units
    truth: dict


def setpoint_program(n: int, dt: float, n_steps: int, levels=(0.65, 1.0), min_step=0.05,
                     rng=None, mode: str = "alternating") -> np.ndarray:
    """Piecewise-constant dimensionless setpoint with ``n_steps`` jittered steps.

    ``mode="alternating"`` switches between the lower and upper third of the
    level range so every step is large; ``"uniform"`` draws each new level
    uniformly, at least ``min_step`` away from the previous one.
    """
    rng = rng or np.random.default_rng(0)
    lo, hi = levels
    if hi - lo < 2 * min_step:
        raise ValueError("setpoint level range too narrow for min_step")
    if mode not in ("alternating", "uniform"):
        raise ValueError(f"unknown setpoint mode {mode!r}")
    band = (hi - lo) / 3
    high = bool(rng.integers(2))

    def draw(prev):
        nonlocal high
        if mode == "alternating":
            high = not high
            return rng.uniform(hi - band, hi) if high else rng.uniform(lo, lo + band)
        while True:
            new = rng.uniform(lo, hi)
            if prev is None or abs(new - prev) >= min_step:
                return new

    sp = np.empty(n)
    level = draw(None)
    if n_steps == 0:
        sp[:] = level
        return sp
    gap = n / (n_steps + 1)
    edges = [int((i + rng.uniform(0.7, 1.3)) * gap) for i in range(n_steps)]
    prev = 0
    for e in edges + [n]:
        sp[prev:e] = level
        prev = e
        level = draw(level)
    return sp


def gauss_markov(n: int, dt: float, std: float, tau: float, rng) -> np.ndarray:
    """Stationary first-order Gauss-Markov process, exact discretization."""
    phi = np.exp(-dt / tau)
    x0 = std * rng.standard_normal()
    e = rng.standard_normal(n) * std * np.sqrt(1 - phi ** 2)
    e[0] = x0
    return lfilter([1.0], [1.0, -phi], e)


def _noise_level(clean: np.ndarray, spec: SynthSpec, name: str) -> float:
    if name in spec.noise_std:
        return float(spec.noise_std[name])
    if name in spec.target_r2:
        r2 = float(spec.target_r2[name])
        var = float(np.var(clean))
        return float(np.sqrt(var * (1 - r2) / r2) / np.ptp(clean))
    return 0.0


def _ram_positions(v_waste_phys: np.ndarray, dt: float, period: float) -> np.ndarray:
    """Sawtooth ram strokes whose swept volume per period matches the fuel flow (unit ram area)."""
    n = len(v_waste_phys)
    m = int(round(period / dt))
    rise = max(int(round(2 * m / 3)), 1)
    idx = np.arange(m)
    shape = np.where(idx <= rise, idx / rise, (m - idx) / (m - rise))
    pos = np.zeros(n)
    for start in range(0, n, m):
        stop = min(start + m, n)
        pos[start:stop] = v_waste_phys[start] * period * shape[:stop - start]
    return pos


def generate_synthetic(spec: SynthSpec, convention: VariableConvention | None = None) -> SynthResult:
    conv = convention or VariableConvention.default()
    dt = spec.sample_period
    n = int(round(spec.duration / dt))
    sp = setpoint_program(n, dt, spec.n_steps, spec.setpoint_levels, spec.min_step,
                          substream(spec.seed, "synth.setpoint"), spec.setpoint_mode)
    inputs = {"Q_SP": conv.to_model("Q_SP", sp)}
    for name, (std, tau) in sorted(spec.disturbances.items()):
        inputs[name] = gauss_markov(n, dt, std, tau, substream(spec.seed, f"synth.{name}"))

    if spec.model == "comprehensive":
        composite = comprehensive_composite(spec.k_p, conv)
        missing = [i for i in composite.external_inputs if i not in inputs]
        for name in missing:
            inputs[name] = np.zeros(n)
        env = composite.evaluate(inputs, dt, initial_state="steady")
        clean = dict(env)
        fuel_rng = substream(spec.seed, "synth.fuel")
        clean["V_waste"] = env["V_waste"] + gauss_markov(n, dt, spec.fuel_noise_std, 600.0, fuel_rng)
        outputs = ["V_Pair", "V_Sair", "T_furn", "Q_steam"]
        truth = {"model": "comprehensive", "k_p": spec.k_p,
                 "subprocesses": [model_to_dict(m) for m in composite.models()]}
    else:
        model: MisoModel = ZOO[spec.model]
        for name in model.inputs:
            inputs.setdefault(name, np.zeros(n))
        clean = dict(inputs)
        clean[model.output] = simulate(model, inputs, dt, "steady").values
        outputs = [model.output]
        truth = {"model": spec.model, **model_to_dict(model)}

    signals = dict(clean)
    noise = {}
    for name in outputs:
        sigma = _noise_level(clean[name], spec, name)
        noise[name] = sigma
        if sigma > 0:
            e = substream(spec.seed, f"synth.noise.{name}").standard_normal(n)
            signals[name] = clean[name] + sigma * np.ptp(clean[name]) * e
    truth["noise_std"] = noise
    truth["spec"] = spec.to_dict()

    physical = {}
    for name, values in signals.items():
        if name in ("m_furn", "Gamma") or name.endswith("_model"):
            continue
        if name == "V_waste":
            continue
        physical[name] = conv.model_to_physical(name, values)
    if spec.model == "comprehensive":
        v_phys = conv.model_to_physical("V_waste", signals["V_waste"])
        physical["x_ram"] = _ram_positions(v_phys, dt, spec.ram_period)
    record = Record.from_arrays(physical, dt)
    return SynthResult(record, signals, clean, noise, truth)


def write_synthetic(result: SynthResult, directory, name: str = "synthetic") -> dict:
    """Write ``<name>.csv`` (ingestion format) and ``<name>_truth.json``."""
    os.makedirs(directory, exist_ok=True)
    csv_path = os.path.join(directory, f"{name}.csv")
    truth_path = os.path.join(directory, f"{name}_truth.json")
    write_csv(result.record, csv_path)
    with open(truth_path, "w") as fh:
        json.dump(result.truth, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return {"csv": csv_path, "truth": truth_path}
