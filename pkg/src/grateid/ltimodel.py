"""Continuous-time process models and their sampled-data simulation.

A path is ``K exp(-s Td) / prod(1 + s T_i)`` with up to three real poles;
a :class:`MisoModel` sums one path per input. Paths are simulated with an
exact zero-order-hold discretization of the whole pole cascade (matrix
exponential of the input-augmented system).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import lru_cache
from graphlib import CycleError, TopologicalSorter
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.linalg import expm
from scipy.signal import lfilter
from scipy.stats import norm

from .dataset import Channel

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None
from .errors import (
    CyclicDependency,
    MissingInput,
    MissingLinkSignal,
    NoCovariance,
    NonFiniteInput,
    ValidationError,
)

T_P_MAX = 1e4
MAX_POLES = 3
STEADY_WINDOW = 300.0  # s
MIRROR_HISTORY = 43200.0  # s of mirrored input history for the "steady" state


@dataclass(frozen=True)
class ProcessModel:
    gain: float
    time_constants: tuple[float, ...] = ()
    dead_time: float = 0.0

    def __post_init__(self):
        tc = tuple(float(t) for t in self.time_constants)
        object.__setattr__(self, "time_constants", tc)
        object.__setattr__(self, "gain", float(self.gain))
        if len(tc) > MAX_POLES:
            raise ValidationError(f"at most {MAX_POLES} poles per path")
        if any(not (0 < t <= T_P_MAX) for t in tc):
            raise ValidationError(f"time constants must lie in (0, {T_P_MAX:g}] s, got {tc}")
        if self.dead_time < 0:
            raise ValidationError("dead time must be non-negative")

    @property
    def n_poles(self) -> int:
        return len(self.time_constants)

    @property
    def params(self) -> np.ndarray:
        return np.array([self.gain, *self.time_constants])

    def with_params(self, params) -> "ProcessModel":
        return replace(self, gain=params[0], time_constants=tuple(params[1:]))

    def simulate(self, u, dt: float, initial: str = "zero") -> np.ndarray:
        return self.gain * unit_path_response(u, self.time_constants, dt, self.dead_time, initial)

    def __str__(self):
        den = "".join(f"({t:.5g}s+1)" for t in self.time_constants)
        return f"{self.gain:.5g}/{den}" if den else f"{self.gain:.5g}"


@lru_cache(maxsize=4096)
def _zoh_cascade(time_constants: tuple[float, ...], dt: float):
    """Exact ZOH matrices of ``x1' = (u - x1)/T1, x_i' = (x_{i-1} - x_i)/T_i``."""
    n = len(time_constants)
    m = np.zeros((n + 1, n + 1))
    for i, t in enumerate(time_constants):
        m[i, i] = -1.0 / t
        if i == 0:
            m[0, n] = 1.0 / t
        else:
            m[i, i - 1] = 1.0 / t
    e = expm(m * dt)
    return np.ascontiguousarray(e[:n, :n]), np.ascontiguousarray(e[:n, n])


def _cascade_lfilter(u, ad, bd, x0):
    n = len(bd)
    states = []
    for i in range(n):
        drive = bd[i] * u
        for j in range(i):
            drive = drive + ad[i, j] * states[j]
        # x[k+1] = a x[k] + drive[k]
        states.append(lfilter([0.0, 1.0], [1.0, -ad[i, i]], drive))
    y = states[-1]
    if np.any(x0):
        # free response C A^k x0
        x = np.array(x0, dtype=float)
        free = np.empty(len(u))
        for k in range(len(u)):
            free[k] = x[-1]
            x = ad @ x
        y = y + free
    return y


def _cascade_loop(u, ad, bd, x0):
    # scalar locals per pole count keep the recursion in registers
    n = bd.shape[0]
    m = u.shape[0]
    y = np.empty(m)
    if n == 1:
        a11 = ad[0, 0]
        b1 = bd[0]
        x1 = x0[0]
        for k in range(m):
            y[k] = x1
            x1 = a11 * x1 + b1 * u[k]
    elif n == 2:
        a11, a21, a22 = ad[0, 0], ad[1, 0], ad[1, 1]
        b1, b2 = bd[0], bd[1]
        x1, x2 = x0[0], x0[1]
        for k in range(m):
            y[k] = x2
            uk = u[k]
            x2 = a21 * x1 + a22 * x2 + b2 * uk
            x1 = a11 * x1 + b1 * uk
    else:
        a11, a21, a22 = ad[0, 0], ad[1, 0], ad[1, 1]
        a31, a32, a33 = ad[2, 0], ad[2, 1], ad[2, 2]
        b1, b2, b3 = bd[0], bd[1], bd[2]
        x1, x2, x3 = x0[0], x0[1], x0[2]
        for k in range(m):
            y[k] = x3
            uk = u[k]
            x3 = a31 * x1 + a32 * x2 + a33 * x3 + b3 * uk
            x2 = a21 * x1 + a22 * x2 + b2 * uk
            x1 = a11 * x1 + b1 * uk
    return y


_cascade = numba.njit(cache=True, nogil=True)(_cascade_loop) if numba else _cascade_lfilter


def steady_level(u, dt: float) -> float:
    """Input level the ``"steady"`` initial state is in equilibrium with."""
    n = max(1, int(round(STEADY_WINDOW / dt)))
    return float(np.mean(u[:n])) if len(u) else 0.0


def unit_path_response(u, time_constants: Sequence[float], dt: float, dead_time: float = 0.0,
                       initial: str | Sequence[float] = "zero") -> np.ndarray:
    """Unit-gain response of a pole cascade to the sampled input ``u``.

    ``initial`` is ``"zero"``, ``"steady"`` or the cascade state vector (one
    entry per pole). ``"steady"`` assumes the input history before the record
    mirrors its first ``MIRROR_HISTORY`` seconds: the cascade starts in
    equilibrium with the mean of that history's first ``STEADY_WINDOW``
    seconds and is driven by the time-reversed opening up to the first sample. A constant opening
    therefore gives exact equilibrium, while a noisy input enters the record
    with a state of the same statistics as later on instead of a decaying
    transient that a fit could exploit.
    """
    u = np.asarray(u, dtype=float)
    if isinstance(initial, str) and initial == "steady":
        n = len(u)
        if n == 0:
            return u.copy()
        m = min(n - 1, int(round(MIRROR_HISTORY / dt)))
        ext = np.concatenate([u[m:0:-1], u])
        u0 = steady_level(ext, dt)
        y = unit_path_response(ext - u0, time_constants, dt, dead_time, "zero")
        return u0 + y[m:]
    if dead_time > 0:
        d = int(round(dead_time / dt))
        if d > 0:
            u = np.concatenate([np.zeros(min(d, len(u))), u[:max(len(u) - d, 0)]])
    tc = tuple(float(t) for t in time_constants)
    if not tc:
        return u.copy()
    ad, bd = _zoh_cascade(tc, float(dt))
    if isinstance(initial, str) and initial != "zero":
        raise ValidationError(f"unknown initial state {initial!r}")
    x0 = np.zeros(len(tc)) if isinstance(initial, str) else np.asarray(initial, dtype=float)
    return _cascade(np.ascontiguousarray(u), ad, bd, x0)


# ---------------------------------------------------------------------------
# MISO models

@dataclass(frozen=True)
class MisoModel:
    """Parallel sum of per-input process models.

    ``covariance`` (when present) is over :meth:`param_vector`, i.e. for each
    path in input order the gain followed by its time constants.
    """

    output: str
    inputs: tuple[str, ...]
    paths: tuple[ProcessModel, ...]
    stages: tuple[int, ...] = ()
    covariance: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "paths", tuple(self.paths))
        if len(self.inputs) != len(self.paths):
            raise ValidationError("one process model per input is required")
        if len(set(self.inputs)) != len(self.inputs):
            raise ValidationError("duplicate model inputs")
        if not self.stages:
            object.__setattr__(self, "stages", (1,) * len(self.inputs))
        object.__setattr__(self, "stages", tuple(int(s) for s in self.stages))
        if self.covariance is not None:
            cov = np.array(self.covariance, dtype=float)
            p = self.n_params
            if cov.shape != (p, p):
                raise ValidationError(f"covariance must be {p}x{p}")
            cov = 0.5 * (cov + cov.T)
            cov.setflags(write=False)
            object.__setattr__(self, "covariance", cov)

    @property
    def n_params(self) -> int:
        return sum(1 + p.n_poles for p in self.paths)

    def param_vector(self) -> np.ndarray:
        if not self.paths:
            return np.zeros(0)
        return np.concatenate([p.params for p in self.paths])

    def with_params(self, theta, covariance=None) -> "MisoModel":
        theta = np.asarray(theta, dtype=float)
        paths, i = [], 0
        for p in self.paths:
            n = 1 + p.n_poles
            paths.append(p.with_params(theta[i:i + n]))
            i += n
        return replace(self, paths=tuple(paths), covariance=covariance)

    def path(self, name: str) -> ProcessModel:
        return self.paths[self.inputs.index(name)]

    def subset(self, names: Sequence[str]) -> "MisoModel":
        idx = [self.inputs.index(n) for n in names]
        return MisoModel(self.output, tuple(self.inputs[i] for i in idx),
                         tuple(self.paths[i] for i in idx), tuple(self.stages[i] for i in idx))

    def merge(self, other: "MisoModel") -> "MisoModel":
        """Union of the paths of two models for the same output; covariances combine block-diagonally."""
        cov = None
        if self.covariance is not None and other.covariance is not None:
            p, q = self.n_params, other.n_params
            cov = np.zeros((p + q, p + q))
            cov[:p, :p] = self.covariance
            cov[p:, p:] = other.covariance
        return MisoModel(self.output, self.inputs + other.inputs, self.paths + other.paths,
                         self.stages + other.stages, cov)

    def path_outputs(self, inputs: Mapping[str, np.ndarray], dt: float,
                     initial="zero") -> dict[str, np.ndarray]:
        out = {}
        for name, p in zip(self.inputs, self.paths):
            if name not in inputs:
                raise MissingInput(f"model input {name!r} not supplied")
            u = np.asarray(inputs[name], dtype=float)
            if not np.all(np.isfinite(u)):
                raise NonFiniteInput(f"input {name!r} contains non-finite samples")
            out[name] = p.simulate(u, dt, initial)
        return out

    def __str__(self):
        terms = ", ".join(f"{n}: {p}" for n, p in zip(self.inputs, self.paths))
        return f"{self.output} = [{terms}]"


def _as_array(x):
    return x.values if isinstance(x, Channel) else np.asarray(x, dtype=float)


def _length(inputs: Mapping) -> int:
    lengths = {len(_as_array(v)) for v in inputs.values()}
    if len(lengths) != 1:
        raise ValidationError("inputs must be aligned")
    return lengths.pop()


def simulate(model: MisoModel, inputs: Mapping, sample_period: float,
             initial_state="zero") -> Channel:
    """Sampled output of ``model`` driven by the named input signals."""
    if not sample_period > 0:
        raise ValidationError("sample_period must be positive")
    arrays = {k: _as_array(v) for k, v in inputs.items()}
    missing = [n for n in model.inputs if n not in arrays]
    if missing:
        raise MissingInput(f"missing model inputs: {missing}")
    n = _length({k: arrays[k] for k in model.inputs}) if model.inputs else _length(arrays)
    y = np.zeros(n)
    for part in model.path_outputs(arrays, sample_period, initial_state).values():
        y += part
    return Channel(model.output, y, sample_period)


def step_response(model: MisoModel, input: str, amplitude: float = 1.0, horizon: float = 3600.0,
                  sample_period: float = 5.0) -> Channel:
    """Response to ``amplitude`` times a unit step on one input, all others held at zero."""
    if input not in model.inputs:
        raise MissingInput(f"{input!r} is not an input of the {model.output} model")
    if not horizon > 0:
        raise ValidationError("horizon must be positive")
    n = int(round(horizon / sample_period)) + 1
    inputs = {name: np.zeros(n) for name in model.inputs}
    inputs[input] = np.full(n, float(amplitude))
    return simulate(model, inputs, sample_period)


def output_sensitivity(model: MisoModel, inputs: Mapping, sample_period: float,
                       initial_state="zero", rel_step: float = 1e-6) -> np.ndarray:
    """Central finite-difference derivative of the output w.r.t. :meth:`MisoModel.param_vector`.

    Returns an ``(n_samples, n_params)`` array.
    """
    arrays = {k: _as_array(v) for k, v in inputs.items()}
    columns = []
    for name, p in zip(model.inputs, model.paths):
        u = arrays[name]
        unit = unit_path_response(u, p.time_constants, sample_period, p.dead_time, initial_state)
        columns.append(unit)
        for i, t in enumerate(p.time_constants):
            h = rel_step * t
            tc_hi = list(p.time_constants)
            tc_lo = list(p.time_constants)
            tc_hi[i] = t + h
            tc_lo[i] = t - h
            hi = unit_path_response(u, tc_hi, sample_period, p.dead_time, initial_state)
            lo = unit_path_response(u, tc_lo, sample_period, p.dead_time, initial_state)
            columns.append(p.gain * (hi - lo) / (2 * h))
    if not columns:
        return np.zeros((_length(arrays), 0))
    return np.column_stack(columns)


def output_confidence_band(model: MisoModel, inputs: Mapping, sample_period: float,
                           level: float = 0.95, initial_state="zero"):
    """Pointwise delta-method band ``y_hat -/+ z * sqrt(g' S g)``.

    Returns ``(lower, upper)`` channels.
    """
    if model.covariance is None:
        raise NoCovariance(f"the {model.output} model carries no parameter covariance")
    y = simulate(model, inputs, sample_period, initial_state)
    g = output_sensitivity(model, inputs, sample_period, initial_state)
    var = np.einsum("ti,ij,tj->t", g, model.covariance, g)
    half = norm.ppf(0.5 + level / 2) * np.sqrt(np.clip(var, 0.0, None))
    return (y.with_values(y.values - half, name=f"{model.output}_lower"),
            y.with_values(y.values + half, name=f"{model.output}_upper"))


# ---------------------------------------------------------------------------
# Chained subprocesses

@dataclass(frozen=True)
class AlgebraicLink:
    """A static relation ``output = func(**{name: signal for name in inputs})``."""

    output: str
    inputs: tuple[str, ...]
    func: Callable[..., np.ndarray] = field(compare=False)
    description: str = ""


class Composite:
    """Dynamic subprocess models and algebraic links evaluated in dependency order."""

    def __init__(self, nodes: Sequence[MisoModel | AlgebraicLink]):
        self.nodes = {}
        for node in nodes:
            if node.output in self.nodes:
                raise ValidationError(f"signal {node.output!r} is produced twice")
            self.nodes[node.output] = node
        graph = {out: {i for i in node.inputs if i in self.nodes}
                 for out, node in self.nodes.items()}
        try:
            self.order = list(TopologicalSorter(graph).static_order())
        except CycleError as exc:
            raise CyclicDependency(f"subprocess graph has a cycle: {exc.args[1]}") from None

    @property
    def external_inputs(self) -> list[str]:
        seen = []
        for node in self.nodes.values():
            for i in node.inputs:
                if i not in self.nodes and i not in seen:
                    seen.append(i)
        return seen

    def models(self) -> list[MisoModel]:
        return [n for n in (self.nodes[o] for o in self.order) if isinstance(n, MisoModel)]

    def evaluate(self, signals: Mapping, sample_period: float, measured: Mapping | None = None,
                 initial_state="zero") -> dict[str, np.ndarray]:
        """All composite signals.

        ``measured`` substitutes named intermediate signals: downstream nodes
        use the measurement while the node itself is still evaluated and
        reported under ``<name>_model``.
        """
        env = {k: _as_array(v) for k, v in signals.items()}
        measured = {k: _as_array(v) for k, v in (measured or {}).items()}
        for out in self.order:
            node = self.nodes[out]
            missing = [i for i in node.inputs if i not in env]
            if missing:
                raise MissingLinkSignal(f"{out!r} needs unavailable signals {missing}")
            if isinstance(node, MisoModel):
                value = simulate(node, env, sample_period, initial_state).values
            else:
                value = np.asarray(node.func(**{i: env[i] for i in node.inputs}), dtype=float)
            if out in measured:
                env[f"{out}_model"] = value
                env[out] = measured[out]
            else:
                env[out] = value
        return env


def chain_subprocesses(stage_models: Sequence[MisoModel],
                       links: Sequence[AlgebraicLink] = ()) -> Composite:
    return Composite(list(stage_models) + list(links))


# ---------------------------------------------------------------------------
# Model files

def model_to_dict(model: MisoModel, convention=None) -> dict:
    d = {
        "output": model.output,
        "paths": [
            {"input": n, "gain": p.gain, "time_constants": list(p.time_constants),
             "dead_time": p.dead_time, "stage": s}
            for n, p, s in zip(model.inputs, model.paths, model.stages)
        ],
    }
    if model.covariance is not None:
        d["covariance"] = [list(map(float, row)) for row in model.covariance]
    if convention is not None:
        names = [n for n in (model.output, *model.inputs) if n in convention]
        d["convention"] = convention.to_dict(names)
    return d


def model_from_dict(d: Mapping) -> MisoModel:
    paths = d["paths"]
    return MisoModel(
        d["output"],
        tuple(p["input"] for p in paths),
        tuple(ProcessModel(p["gain"], tuple(p.get("time_constants", ())), p.get("dead_time", 0.0))
              for p in paths),
        tuple(p.get("stage", 1) for p in paths),
        d.get("covariance"),
    )


def dumps_model(model: MisoModel, convention=None, extra: Mapping | None = None) -> str:
    d = model_to_dict(model, convention)
    if extra:
        d.update(extra)
    return json.dumps(d, indent=2, sort_keys=True) + "\n"


def loads_model(text: str) -> MisoModel:
    return model_from_dict(json.loads(text))


def loads_model_file(text: str) -> tuple[MisoModel, dict]:
    """Model plus every other top-level entry of the file (convention, metadata)."""
    d = json.loads(text)
    extra = {k: v for k, v in d.items() if k not in ("output", "paths", "covariance")}
    return model_from_dict(d), extra


def save_model(model: MisoModel, path, convention=None, extra=None) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_model(model, convention, extra))


def load_model(path) -> MisoModel:
    with open(path) as fh:
        return loads_model(fh.read())
