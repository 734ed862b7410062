"""K-fold objective and the Bayesian optimization loop."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .._rng import substream
from ..dataset import ExperimentSet
from ..errors import GrateIdError, InvalidCounts, NoFeasiblePoint
from ..estimator import FitObjective, IdentData, mse, predict, staged_fit
from ..ltimodel import MisoModel
from .acquisition import expected_improvement, probability_of_feasibility
from .gp import GaussianProcess
from .space import HyperParams, HyperSpace


@dataclass
class KFoldResult:
    J: float
    feasible: bool
    fold_models: list = field(default_factory=list)
    experiment_mse: dict = field(default_factory=dict)   # experiment index -> held-out MSE
    error: str | None = None

    def __iter__(self):
        yield self.J
        yield self.feasible


def kfold_objective(eta: HyperParams, space: HyperSpace, data: IdentData, eset: ExperimentSet,
                    objective: FitObjective | None = None) -> KFoldResult:
    """Mean held-out experiment MSE over the folds of ``eset`` under ``eta``.

    Each fold is predicted by a model fit on the remaining training
    experiments. The point is infeasible when any fold fit reaches the pole
    bound; a failing fold makes the whole evaluation infeasible with J = inf.
    """
    objective = objective or FitObjective(covariance=False)
    if eset.n_folds < 2:
        raise InvalidCounts("cross-validation needs at least two folds")
    space.validate(eta)
    stages = space.to_stages(eta)
    models: list[MisoModel] = []
    per_exp: dict[int, float] = {}
    feasible = True
    y = data.y
    try:
        for k in range(1, eset.n_folds + 1):
            held = eset.fold(k)
            rest = [i for i in eset.train if i not in held]
            fold_data = data.with_windows(eset.select(rest))
            res = staged_fit(stages, fold_data, objective)
            feasible = feasible and res.feasible
            models.append(res.model)
            y_hat = predict(res.model, data, objective.initial)
            for i in held:
                a, b = eset.windows[i]
                per_exp[i] = mse(y[a:b], y_hat[a:b])
    except (GrateIdError, np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
        return KFoldResult(math.inf, False, models, per_exp, f"{type(exc).__name__}: {exc}")
    n_e = len(eset.train)
    J = sum(per_exp[i] for i in sorted(per_exp)) / n_e
    if not np.isfinite(J):
        return KFoldResult(math.inf, False, models, per_exp, "non-finite objective")
    return KFoldResult(float(J), feasible, models, per_exp)


# ---------------------------------------------------------------------------
# Observations

@dataclass(frozen=True)
class Observation:
    eta: HyperParams
    J: float
    feasible: bool
    source: str = "bo"


class ObservationSet:
    """Append-only evaluation record with the feasible incumbent."""

    def __init__(self, space: HyperSpace):
        self.space = space
        self._obs: list[Observation] = []
        self._keys: set[bytes] = set()
        self.incumbent: Observation | None = None

    def __len__(self):
        return len(self._obs)

    def __iter__(self):
        return iter(self._obs)

    def __getitem__(self, i) -> Observation:
        return self._obs[i]

    def key(self, eta: HyperParams) -> bytes:
        return self.space.encode(eta).tobytes()

    def contains(self, eta: HyperParams) -> bool:
        return self.key(eta) in self._keys

    def add(self, eta: HyperParams, J: float, feasible: bool, source: str = "bo") -> Observation:
        feasible = bool(feasible) and bool(np.isfinite(J))
        obs = Observation(eta, float(J), feasible, source)
        self._obs.append(obs)
        self._keys.add(self.key(eta))
        if feasible and (self.incumbent is None or obs.J < self.incumbent.J):
            self.incumbent = obs
        return obs


# ---------------------------------------------------------------------------
# Proposal

def _score(space, cands, gp, cls, best):
    x = np.array([space.encode(c) for c in cands])
    if gp is not None and best is not None:
        mu, sd = gp.predict(x)
        score = expected_improvement(mu, sd, best)
    else:
        score = np.ones(len(cands))
    if cls is not None:
        m, s = cls.predict(x, include_noise=True)
        score = score * probability_of_feasibility(m, s)
    return np.atleast_1d(score)


def propose_next(space: HyperSpace, data: ObservationSet, rng: np.random.Generator,
                 n_candidates: int = 2000, n_refine: int = 5, refine_rounds: int = 5,
                 gp_restarts: int = 3) -> HyperParams | None:
    """Maximize EI times the probability of feasibility over the space.

    Returns None when every point of a finite space has been observed.
    """
    finite = [o for o in data if np.isfinite(o.J)]
    if not finite:
        for _ in range(1000):
            eta = space.sample(rng)
            if not data.contains(eta):
                return eta
        return None

    gp = GaussianProcess(n_restarts=gp_restarts)
    x = np.array([space.encode(o.eta) for o in finite])
    gp.fit(x, np.log(np.maximum([o.J for o in finite], 1e-300)), rng)
    best = math.log(max(data.incumbent.J, 1e-300)) if data.incumbent is not None else None
    cls = None
    if any(not o.feasible for o in data):
        labels = np.array([1.0 if o.feasible else -1.0 for o in data])
        xa = np.array([space.encode(o.eta) for o in data])
        if np.all(labels < 0):
            cls = None
        else:
            cls = GaussianProcess(n_restarts=gp_restarts).fit(xa, labels, rng)

    pool: dict[bytes, HyperParams] = {}

    def offer(etas: Iterable[HyperParams]):
        for e in etas:
            k = data.key(e)
            if k not in data._keys and k not in pool:
                pool[k] = e

    offer(space.sample(rng) for _ in range(n_candidates))
    ranked = sorted(finite, key=lambda o: (not o.feasible, o.J))
    for o in ranked[:5]:
        offer(space.neighbours(o.eta, rng))
    if not pool:
        return None
    cands = list(pool.values())
    scores = _score(space, cands, gp, cls, best)

    order = np.argsort(-scores, kind="stable")[:n_refine]
    best_eta, best_score = cands[order[0]], scores[order[0]]
    for j in order:
        cur, cur_s = cands[j], scores[j]
        for _ in range(refine_rounds):
            nb = [e for e in space.neighbours(cur, rng) if not data.contains(e)]
            if not nb:
                break
            s = _score(space, nb, gp, cls, best)
            i = int(np.argmax(s))
            if s[i] <= cur_s:
                break
            cur, cur_s = nb[i], s[i]
        if cur_s > best_score:
            best_eta, best_score = cur, cur_s
    return best_eta


# ---------------------------------------------------------------------------
# Loop

@dataclass
class TuneResult:
    best: HyperParams
    best_J: float
    observations: ObservationSet
    trace: list[dict]


def _finite_or_none(v):
    return float(v) if np.isfinite(v) else None


def trace_entry(space: HyperSpace, iteration: int, obs: Observation,
                data: ObservationSet) -> dict:
    inc = data.incumbent
    return {
        "iteration": iteration,
        "source": obs.source,
        "eta": obs.eta.to_dict(space),
        "J": _finite_or_none(obs.J),
        "feasible": obs.feasible,
        "incumbent_J": inc.J if inc is not None else None,
        "incumbent": inc.eta.to_dict(space) if inc is not None else None,
    }


def tune(space: HyperSpace, evaluate: Callable[[HyperParams], Sequence], budget: int = 300,
         seed: int = 0, initial: Iterable[HyperParams] = (),
         callback: Callable[[dict], None] | None = None, stream: str = "bo",
         **propose_kw) -> TuneResult:
    """Bayesian optimization of ``evaluate`` (returning ``(J, feasible)``) over ``space``.

    ``initial`` points are evaluated first and do not count against ``budget``.
    ``stream`` names the random substream of ``seed`` used for proposals.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    rng = substream(seed, stream)
    data = ObservationSet(space)
    trace: list[dict] = []

    def run(eta, it, source):
        space.validate(eta)
        J, feasible = tuple(evaluate(eta))[:2]
        obs = data.add(eta, J, feasible, source)
        entry = trace_entry(space, it, obs, data)
        trace.append(entry)
        if callback is not None:
            callback(entry)

    for eta in initial:
        eta = space.canonical(eta)
        if not data.contains(eta):
            run(eta, 0, "initial")
    for it in range(1, budget + 1):
        eta = propose_next(space, data, rng, **propose_kw)
        if eta is None:
            break
        run(eta, it, "bo")
    if data.incumbent is None:
        raise NoFeasiblePoint(f"no feasible hyperparameters after {len(data)} evaluations")
    return TuneResult(data.incumbent.eta, data.incumbent.J, data, trace)

