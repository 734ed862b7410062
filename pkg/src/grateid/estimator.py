"""Regularized least-squares fitting of MISO process models.

The objective for a set of experiment windows is

    sum_i MSE_i(theta) + lam * ||theta_s||^2

where ``theta_s`` is the search parameterization: gains as-is and time
constants as ``log(T / t_ref)``. The model is simulated once over the
continuous record (steady initial state at the record start) and the
residuals are taken on the experiment windows only.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    ConstantTarget,
    EmptyStageOne,
    LengthMismatch,
    NoFreeParameters,
    NonConvergence,
    NonFiniteInput,
    ValidationError,
)
from .ltimodel import T_P_MAX, MisoModel, ProcessModel, unit_path_response


def mse(y, y_hat) -> float:
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise LengthMismatch(f"{y.shape} vs {y_hat.shape}")
    if y.size == 0:
        raise LengthMismatch("empty signals")
    return float(np.mean((y - y_hat) ** 2))


def r_squared(y, y_hat) -> float:
    """Coefficient of determination, ``1 - MSE / var(y)`` with 1/N variance."""
    y = np.asarray(y, dtype=float)
    var = float(np.mean((y - y.mean()) ** 2))
    if var == 0:
        raise ConstantTarget("R^2 undefined for a constant target")
    return 1.0 - mse(y, y_hat) / var


@dataclass(frozen=True)
class IdentData:
    """Signals of one continuous record plus the experiment windows to fit on."""

    signals: Mapping[str, np.ndarray]
    output: str
    sample_period: float
    windows: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "windows", tuple((int(a), int(b)) for a, b in self.windows))
        if not self.windows:
            raise ValidationError("at least one experiment window is required")

    @property
    def y(self) -> np.ndarray:
        return np.asarray(self.signals[self.output], dtype=float)

    def with_windows(self, windows) -> "IdentData":
        return IdentData(self.signals, self.output, self.sample_period, tuple(windows))


@dataclass(frozen=True)
class FitObjective:
    lam: float = 0.0
    t_max: float = T_P_MAX
    t_min: float = 0.1
    t_ref: float = 1000.0
    n_starts: int = 5
    start_range: tuple[float, float] = (30.0, 5000.0)
    max_iter: int = 500
    ftol: float = 1e-9
    gtol: float = 1e-8
    initial: str = "steady"
    covariance: bool = True

    def __post_init__(self):
        if self.lam < 0:
            raise ValidationError("lambda must be non-negative")


@dataclass
class FitResult:
    model: MisoModel
    mse: list[float]
    r2: list[float]
    objective: float
    iterations: int
    grad_norm: float
    converged: bool
    hit_pole_bound: bool
    history: list[float] = field(default_factory=list, repr=False)

    @property
    def feasible(self) -> bool:
        return not self.hit_pole_bound


# ---------------------------------------------------------------------------
# Residual machinery

class _Problem:
    """Free-path fitting problem with the gains projected out.

    The optimizer works on ``x = log(T / t_ref)`` for every pole; for given
    time constants the gains solve a ridge problem in closed form, so the
    reduced residual is that of the full objective at the optimal gains.
    """

    def __init__(self, template: MisoModel, data: IdentData, objective: FitObjective,
                 offset: np.ndarray):
        self.template = template
        self.obj = objective
        # always the whole record: the steady initial state depends on its opening
        n = len(data.y)
        self.u = [np.ascontiguousarray(np.asarray(data.signals[name], dtype=float)[:n])
                  for name in template.inputs]
        for name, u in zip(template.inputs, self.u):
            if not np.all(np.isfinite(u)):
                raise NonFiniteInput(f"input {name!r} contains non-finite samples")
        if not np.all(np.isfinite(data.y)):
            raise NonFiniteInput(f"output {data.output!r} contains non-finite samples")
        self.windows = data.windows
        self.weights = [1.0 / np.sqrt(b - a) for a, b in self.windows]
        self.dt = data.sample_period
        self.target = self._window_stack(data.y[:n] - offset[:n])
        self.n_paths = len(template.paths)
        self.pole_path = [j for j, p in enumerate(template.paths) for _ in range(p.n_poles)]
        self.n = len(self.pole_path)
        self.lower = np.full(self.n, np.log(objective.t_min / objective.t_ref))
        self.upper = np.full(self.n, np.log(objective.t_max / objective.t_ref))
        self._cache_x = None

    # parameter bookkeeping -------------------------------------------------
    def _tc(self, x, j):
        # clip away round-off at the bounds
        return tuple(min(max(self.obj.t_ref * np.exp(x[i]), self.obj.t_min), self.obj.t_max)
                     for i, jj in enumerate(self.pole_path) if jj == j)

    def theta(self, x, gains):
        """Natural parameter vector (gain, time constants per path)."""
        out = []
        for j in range(self.n_paths):
            out.append(gains[j])
            out.extend(self._tc(x, j))
        return np.array(out)

    def scaled(self, x, gains):
        out = []
        for j in range(self.n_paths):
            out.append(gains[j])
            out.extend(x[i] for i, jj in enumerate(self.pole_path) if jj == j)
        return np.array(out)

    # simulation ------------------------------------------------------------
    def _window_stack(self, v):
        return np.concatenate([w * v[a:b] for w, (a, b) in zip(self.weights, self.windows)])

    def _unit(self, j, tc):
        p = self.template.paths[j]
        return unit_path_response(self.u[j], tc, self.dt, p.dead_time, self.obj.initial)

    def _columns(self, x):
        if self._cache_x is not None and np.array_equal(x, self._cache_x):
            return self._cache_z
        z = np.column_stack([self._window_stack(self._unit(j, self._tc(x, j)))
                             for j in range(self.n_paths)])
        self._cache_x, self._cache_z = np.array(x), z
        return z

    def gains(self, x):
        z = self._columns(x)
        a = z.T @ z + self.obj.lam * np.eye(self.n_paths)
        return np.linalg.solve(a, z.T @ self.target)

    # reduced problem ---------------------------------------------------------
    def residuals(self, x):
        z = self._columns(x)
        k = self.gains(x)
        r = self.target - z @ k
        if self.obj.lam > 0:
            r = np.concatenate([r, np.sqrt(self.obj.lam) * k, np.sqrt(self.obj.lam) * x])
        return r

    def jacobian(self, x, rel_step=1e-6):
        z = self._columns(x)
        k = self.gains(x)
        lam = self.obj.lam
        n_rows = len(self.target)
        cols = []
        for i, j in enumerate(self.pole_path):
            xp = np.array(x)
            xp[i] += rel_step
            dz = (self._window_stack(self._unit(j, self._tc(xp, j))) - z[:, j]) / rel_step
            cols.append(dz * k[j])
        v = np.column_stack(cols) if cols else np.zeros((n_rows, 0))
        # Kaufman projection onto the complement of the augmented column space
        a = z.T @ z + lam * np.eye(self.n_paths)
        coef = np.linalg.solve(a, z.T @ v)
        jac = -(v - z @ coef)
        if lam > 0:
            jac = np.vstack([jac, -np.sqrt(lam) * coef, np.sqrt(lam) * np.eye(self.n)])
        return jac

    # full parameterization, used for the covariance ----------------------------
    def full_jacobian(self, x, gains, rel_step=1e-5, central=True):
        """Weighted d(prediction)/d(scaled theta) on the stacked windows."""
        cols = []
        for j in range(self.n_paths):
            tc = self._tc(x, j)
            base = self._unit(j, tc)
            cols.append(self._window_stack(base))
            lt = np.log(tc)
            for i in range(len(tc)):
                hi = lt.copy()
                hi[i] += rel_step
                y_hi = self._unit(j, tuple(np.exp(hi)))
                if central:
                    lo = lt.copy()
                    lo[i] -= rel_step
                    d = (y_hi - self._unit(j, tuple(np.exp(lo)))) / (2 * rel_step)
                else:
                    d = (y_hi - base) / rel_step
                cols.append(self._window_stack(gains[j] * d))
        return np.column_stack(cols)

    def initial_point(self, t_start: float):
        """All time constants near ``t_start``; extra poles of a path spread by factors of 2."""
        x = np.zeros(self.n)
        seen = {}
        for i, j in enumerate(self.pole_path):
            m = seen.get(j, 0)
            seen[j] = m + 1
            x[i] = np.log(t_start * 0.5 ** m / self.obj.t_ref)
        return np.clip(x, self.lower, self.upper)


def _projected_gradient(g, x, lower, upper):
    pg = g.copy()
    at_lo = (x <= lower) & (g > 0)
    at_hi = (x >= upper) & (g < 0)
    pg[at_lo | at_hi] = 0.0
    return pg


def levenberg_marquardt(problem: _Problem, x0, max_iter=500, ftol=1e-9, gtol=1e-8):
    """Box-constrained Levenberg-Marquardt with Marquardt diagonal scaling.

    Trial points are projected onto the bounds; the damping follows the
    gain-ratio rule. Returns ``(x, cost, iterations, grad_norm, converged, history)``
    where ``cost = ||r||^2`` and ``history`` holds the cost after every
    accepted step.
    """
    lower, upper = problem.lower, problem.upper
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    r = problem.residuals(x)
    cost = float(r @ r)
    history = [cost]
    jac = problem.jacobian(x)
    mu = None
    nu = 2.0
    converged = False
    it = 0
    gnorm = np.inf
    while it < max_iter:
        g = jac.T @ r
        gnorm = float(np.max(np.abs(_projected_gradient(g, x, lower, upper)))) if len(g) else 0.0
        if gnorm < gtol:
            converged = True
            break
        a = jac.T @ jac
        d = np.maximum(np.diag(a), 1e-12 * max(np.max(np.diag(a)), 1e-300))
        if mu is None:
            mu = 1e-3
        try:
            step = np.linalg.solve(a + mu * np.diag(d), -g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(a + mu * np.diag(d), -g, rcond=None)[0]
        x_new = np.clip(x + step, lower, upper)
        h = x_new - x
        r_new = problem.residuals(x_new)
        cost_new = float(r_new @ r_new)
        # predicted decrease of ||r + J h||^2
        jh = jac @ h
        predicted = -(2 * g @ h + jh @ jh)
        actual = cost - cost_new
        rho = actual / predicted if predicted > 0 else -1.0
        if actual > 0 and rho > 0:
            x, r = x_new, r_new
            rel = actual / max(cost, 1e-300)
            cost = cost_new
            history.append(cost)
            it += 1
            jac = problem.jacobian(x)
            mu *= max(1 / 3, 1 - (2 * rho - 1) ** 3)
            nu = 2.0
            if rel < ftol:
                converged = True
                break
        else:
            mu *= nu
            nu *= 2
            if mu > 1e16 or not np.any(h):
                # no representable descent step left
                converged = np.linalg.norm(h) <= 1e-12 * (1 + np.linalg.norm(x))
                break
    return x, cost, it, gnorm, converged, history


def _covariance(problem: _Problem, x, gains):
    """Parameter covariance in natural units.

    Gauss-Newton sandwich for the weighted, regularized objective; with
    ``lam = 0`` and equal window lengths it reduces to ``s^2 (J'J)^-1``.
    """
    jw = problem.full_jacobian(x, gains)  # rows weighted by 1/sqrt(N_i)
    resid = problem.target - problem._columns(x) @ gains
    w2 = np.concatenate([np.full(b - a, 1.0 / (b - a)) for a, b in problem.windows])
    p = jw.shape[1]
    s2 = float(np.sum(resid ** 2 / w2)) / max(len(w2) - p, 1)
    h = jw.T @ jw + problem.obj.lam * np.eye(p)
    meat = jw.T @ (jw * (s2 * w2)[:, None])
    h_inv = np.linalg.pinv(h)
    cov_s = h_inv @ meat @ h_inv
    theta = problem.theta(x, gains)
    scale = np.ones(p)
    i = 0
    for j in range(problem.n_paths):
        n_poles = problem.template.paths[j].n_poles
        scale[i + 1:i + 1 + n_poles] = theta[i + 1:i + 1 + n_poles]
        i += 1 + n_poles
    cov = cov_s * np.outer(scale, scale)
    return 0.5 * (cov + cov.T)


def _metrics(model: MisoModel, data: IdentData, offset):
    y = data.y
    y_hat = predict(model, data) + offset
    mses, r2s = [], []
    for a, b in data.windows:
        mses.append(mse(y[a:b], y_hat[a:b]))
        try:
            r2s.append(r_squared(y[a:b], y_hat[a:b]))
        except ConstantTarget:
            r2s.append(float("nan"))
    return mses, r2s


def predict(model: MisoModel, data: IdentData, initial: str = "steady", n: int | None = None):
    """Model output over the record (up to ``n`` samples)."""
    n = len(data.y) if n is None else n
    y = np.zeros(n)
    for name, p in zip(model.inputs, model.paths):
        y += p.simulate(np.asarray(data.signals[name], dtype=float)[:n], data.sample_period,
                        initial)
    return y


def fit(template: MisoModel, data: IdentData, objective: FitObjective | None = None,
        fixed: MisoModel | None = None) -> FitResult:
    """Fit the free paths of ``template`` on the experiment windows of ``data``.

    ``template`` sets the inputs and pole counts (its parameter values are
    ignored). ``fixed`` holds already identified paths; their output is
    subtracted from the target and left untouched. The returned model is the
    union of ``fixed`` and the fitted paths.
    """
    objective = objective or FitObjective()
    if not template.inputs:
        raise NoFreeParameters("the template has no free paths")
    n = len(data.y)
    offset = predict(fixed, data, objective.initial) if fixed is not None and fixed.inputs \
        else np.zeros(n)
    problem = _Problem(template, data, objective, offset)

    best = None
    lo, hi = objective.start_range
    starts = np.geomspace(lo, hi, objective.n_starts) if objective.n_starts > 1 \
        else [np.sqrt(lo * hi)]
    if problem.n == 0:
        starts = starts[:1]
    for t0 in starts:
        res = levenberg_marquardt(problem, problem.initial_point(float(t0)), objective.max_iter,
                                  objective.ftol, objective.gtol)
        if best is None or res[1] < best[1]:
            best = res
    x, cost, iters, gnorm, converged, history = best
    if not converged:
        warnings.warn("least squares did not meet its tolerances; returning the best iterate",
                      NonConvergence, stacklevel=2)
    gains = problem.gains(x)
    theta = problem.theta(x, gains)
    cov = _covariance(problem, x, gains) if objective.covariance else None
    fitted = template.with_params(theta, covariance=cov)
    hit = any(t >= objective.t_max * (1 - 1e-3) for p in fitted.paths for t in p.time_constants)
    model = fixed.merge(fitted) if fixed is not None and fixed.inputs else fitted
    mses, r2s = _metrics(model, data, 0.0)
    return FitResult(model, mses, r2s, cost, iters, gnorm, converged, hit, history)


# ---------------------------------------------------------------------------
# Sequential stages

@dataclass(frozen=True)
class Stage:
    inputs: tuple[str, ...]
    poles: tuple[int, ...]
    lam: float = 0.0


def template_for(output: str, inputs: Sequence[str], poles: Sequence[int], stage: int = 1,
                 t0: float = 100.0) -> MisoModel:
    paths = tuple(ProcessModel(1.0, tuple(t0 for _ in range(k))) for k in poles)
    return MisoModel(output, tuple(inputs), paths, (stage,) * len(inputs))


def staged_fit(stages: Sequence[Stage], data: IdentData,
               objective: FitObjective | None = None) -> FitResult:
    """Fit the stages in order, each against the residual of all earlier ones.

    Parameters of earlier stages are frozen. The final covariance is block
    diagonal over stages.
    """
    objective = objective or FitObjective()
    if not stages or not stages[0].inputs:
        raise EmptyStageOne("stage 1 must contain at least one input")
    if len(stages) > 3:
        raise ValidationError("at most three stages are supported")
    fixed = None
    total_iters = 0
    hit = False
    history = []
    result = None
    for s, stage in enumerate(stages, start=1):
        if not stage.inputs:
            continue
        tmpl = template_for(data.output, stage.inputs, stage.poles, s)
        obj = FitObjective(**{**objective.__dict__, "lam": stage.lam})
        result = fit(tmpl, data, obj, fixed)
        fixed = result.model
        total_iters += result.iterations
        hit = hit or result.hit_pole_bound
        history.extend(result.history)
    result.iterations = total_iters
    result.hit_pole_bound = hit
    result.history = history
    return result
