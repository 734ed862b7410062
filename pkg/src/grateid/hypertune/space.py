"""Hyperparameter space of the identification procedure.

Per candidate input: the stage where it first enters (0 = excluded) and its
pole count; per stage: the regularization weight, searched in log10.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ValidationError
from ..estimator import Stage


@dataclass(frozen=True)
class HyperParams:
    stages: tuple[int, ...]
    poles: tuple[int, ...]
    log_lams: tuple[float, ...] = ()

    @property
    def lams(self) -> tuple[float, ...]:
        return tuple(10.0 ** v for v in self.log_lams)

    def to_dict(self, space: "HyperSpace") -> dict:
        return {
            "inputs": {name: {"stage": s, "poles": p}
                       for name, s, p in zip(space.inputs, self.stages, self.poles)},
            "lambda": [float(v) for v in self.lams],
        }


@dataclass(frozen=True)
class HyperSpace:
    """Search domain. ``inputs`` lists every candidate input, mandatory ones included."""

    inputs: tuple[str, ...]
    mandatory: tuple[str, ...] = ()
    n_stages: int = 3
    pole_choices: tuple[int, ...] = (1, 2, 3)
    lam_bounds: tuple[float, float] = (1e-6, 1e2)
    tune_lambda: bool = True
    fixed_lambda: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "mandatory", tuple(self.mandatory))
        object.__setattr__(self, "pole_choices", tuple(sorted(self.pole_choices)))
        if not self.mandatory and not self.inputs:
            raise ValidationError("empty hyperparameter space")
        if any(m not in self.inputs for m in self.mandatory):
            raise ValidationError("mandatory inputs must be candidate inputs")
        if not 1 <= self.n_stages <= 3:
            raise ValidationError("between one and three stages")
        if any(p not in (0, 1, 2, 3) for p in self.pole_choices):
            raise ValidationError("pole counts must be in 0..3")
        lo, hi = self.lam_bounds
        if not 0 < lo <= hi:
            raise ValidationError("invalid lambda bounds")

    # ------------------------------------------------------------------
    @property
    def optional(self) -> list[int]:
        return [i for i, n in enumerate(self.inputs) if n not in self.mandatory]

    @property
    def _log_bounds(self):
        return float(np.log10(self.lam_bounds[0])), float(np.log10(self.lam_bounds[1]))

    @property
    def dim(self) -> int:
        d = 2 * len(self.optional)
        if len(self.pole_choices) > 1:
            d += len(self.inputs)
        if self.tune_lambda:
            d += self.n_stages
        return d

    def canonical(self, eta: HyperParams) -> HyperParams:
        """Mandatory inputs in stage 1, stage labels contiguous, unused entries at defaults."""
        stages = list(eta.stages)
        for i, name in enumerate(self.inputs):
            if name in self.mandatory:
                stages[i] = 1
        poles = [p if s > 0 else self.pole_choices[0] for s, p in zip(stages, eta.poles)]
        used = sorted({s for s in stages if s > 0})
        relabel = {s: k + 1 for k, s in enumerate(used)}
        lo, _ = self._log_bounds
        if self.tune_lambda:
            old = list(eta.log_lams) + [lo] * (self.n_stages - len(eta.log_lams))
            log_lams = [lo] * self.n_stages
            for s, k in relabel.items():
                log_lams[k - 1] = float(old[s - 1])
        else:
            log_lams = [float(np.log10(self.fixed_lambda))] * self.n_stages
        stages = [relabel.get(s, 0) for s in stages]
        if 1 not in stages:
            # keep at least one input in the first stage
            stages[self.optional[0] if self.optional else 0] = 1
        return HyperParams(tuple(stages), tuple(poles), tuple(log_lams))

    def validate(self, eta: HyperParams) -> None:
        if len(eta.stages) != len(self.inputs) or len(eta.poles) != len(self.inputs):
            raise ValidationError("hyperparameters do not match the space")
        for name, s, p in zip(self.inputs, eta.stages, eta.poles):
            if not 0 <= s <= self.n_stages:
                raise ValidationError(f"{name}: stage {s} out of range")
            if name in self.mandatory and s != 1:
                raise ValidationError(f"mandatory input {name} must be in stage 1")
            if s and p not in self.pole_choices:
                raise ValidationError(f"{name}: pole count {p} not allowed")
        used = sorted({s for s in eta.stages if s})
        if used != list(range(1, len(used) + 1)):
            raise ValidationError("stages must be contiguous from 1")

    def make(self, stages: dict | None = None, poles: dict | None = None,
             lams: Sequence[float] | None = None) -> HyperParams:
        """Build a canonical point from name-keyed choices (unnamed optional inputs are excluded)."""
        stages = stages or {}
        poles = poles or {}
        st = tuple(stages.get(n, 1 if n in self.mandatory else 0) for n in self.inputs)
        po = tuple(poles.get(n, self.pole_choices[0]) for n in self.inputs)
        lams = list(lams) if lams is not None else [self.fixed_lambda] * self.n_stages
        return self.canonical(HyperParams(st, po, tuple(float(np.log10(v)) for v in lams)))

    def sample(self, rng: np.random.Generator) -> HyperParams:
        stages = []
        for name in self.inputs:
            stages.append(1 if name in self.mandatory else int(rng.integers(0, self.n_stages + 1)))
        poles = [int(rng.choice(self.pole_choices)) for _ in self.inputs]
        lo, hi = self._log_bounds
        log_lams = [float(rng.uniform(lo, hi)) for _ in range(self.n_stages)]
        return self.canonical(HyperParams(tuple(stages), tuple(poles), tuple(log_lams)))

    def encode(self, eta: HyperParams) -> np.ndarray:
        """Point in the unit cube: inclusion flag and scaled stage per optional input,
        scaled pole count per input, scaled log10 lambda per stage."""
        v = []
        span = max(self.n_stages - 1, 1)
        for i in self.optional:
            s = eta.stages[i]
            v.append(1.0 if s else 0.0)
            v.append((s - 1) / span if s else 0.0)
        if len(self.pole_choices) > 1:
            p_lo, p_hi = self.pole_choices[0], self.pole_choices[-1]
            for s, p in zip(eta.stages, eta.poles):
                v.append((p - p_lo) / (p_hi - p_lo) if s else 0.0)
        if self.tune_lambda:
            lo, hi = self._log_bounds
            for x in eta.log_lams:
                v.append((x - lo) / (hi - lo) if hi > lo else 0.0)
        return np.array(v)

    def neighbours(self, eta: HyperParams, rng: np.random.Generator | None = None,
                   n_lambda: int = 4, lambda_step: float = 0.5) -> list[HyperParams]:
        """Points differing in one discrete choice, plus log-lambda perturbations."""
        out = []
        for i in self.optional:
            for s in range(self.n_stages + 1):
                if s != eta.stages[i]:
                    st = list(eta.stages)
                    st[i] = s
                    out.append(self.canonical(HyperParams(tuple(st), eta.poles, eta.log_lams)))
        for i, s in enumerate(eta.stages):
            if not s:
                continue
            for p in self.pole_choices:
                if p != eta.poles[i]:
                    po = list(eta.poles)
                    po[i] = p
                    out.append(self.canonical(HyperParams(eta.stages, tuple(po), eta.log_lams)))
        if self.tune_lambda and rng is not None:
            lo, hi = self._log_bounds
            n_used = max(eta.stages)
            for _ in range(n_lambda):
                ll = list(eta.log_lams)
                for k in range(n_used):
                    ll[k] = float(np.clip(ll[k] + lambda_step * rng.standard_normal(), lo, hi))
                out.append(self.canonical(HyperParams(eta.stages, eta.poles, tuple(ll))))
        return out

    def to_stages(self, eta: HyperParams) -> list[Stage]:
        """Estimator stage list for ``eta``."""
        result = []
        for k in range(1, max(eta.stages) + 1):
            idx = [i for i, s in enumerate(eta.stages) if s == k]
            result.append(Stage(tuple(self.inputs[i] for i in idx),
                                tuple(eta.poles[i] for i in idx), eta.lams[k - 1]))
        return result

    def enumerate(self) -> list[HyperParams]:
        """All canonical discrete points (lambda at its fixed value). Small spaces only."""
        import itertools
        choices = []
        for name in self.inputs:
            st = [1] if name in self.mandatory else list(range(self.n_stages + 1))
            choices.append([(s, p) for s in st for p in (self.pole_choices if s else
                                                         self.pole_choices[:1])])
        seen = {}
        lo, _ = self._log_bounds
        ll = (float(np.log10(self.fixed_lambda)) if not self.tune_lambda else lo,) * self.n_stages
        for combo in itertools.product(*choices):
            eta = self.canonical(HyperParams(tuple(c[0] for c in combo),
                                             tuple(c[1] for c in combo), ll))
            seen.setdefault(self.encode(eta).tobytes(), eta)
        return list(seen.values())
