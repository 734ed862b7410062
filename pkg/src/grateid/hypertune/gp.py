"""Gaussian-process regression with an ARD Matern 5/2 kernel.

Hyperparameters (signal variance, per-dimension lengthscales, noise variance,
constant mean) are fit by maximizing the marginal likelihood with L-BFGS-B
from several starts. Targets are standardized internally.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

SQRT5 = np.sqrt(5.0)
NOISE_FLOOR = 1e-10


def matern52(x1: np.ndarray, x2: np.ndarray, lengthscales, variance: float) -> np.ndarray:
    """ARD Matern 5/2 covariance between the rows of ``x1`` and ``x2``."""
    d = (x1[:, None, :] - x2[None, :, :]) / np.asarray(lengthscales)
    r = np.sqrt(np.sum(d * d, axis=-1))
    return variance * (1.0 + SQRT5 * r + 5.0 / 3.0 * r * r) * np.exp(-SQRT5 * r)


class GaussianProcess:
    """GP surrogate.

    Parameters
    ----------
    n_restarts : int
        Number of marginal-likelihood optimizer starts (the first is a fixed default).
    noise_bounds : tuple
        Bounds on the noise variance in standardized target units.
    """

    def __init__(self, n_restarts: int = 3, lengthscale_bounds=(1e-2, 1e2),
                 variance_bounds=(1e-3, 1e2), noise_bounds=(NOISE_FLOOR, 1.0),
                 mean_bounds=(-5.0, 5.0), fixed_noise: float | None = None):
        self.n_restarts = n_restarts
        self.lengthscale_bounds = lengthscale_bounds
        self.variance_bounds = variance_bounds
        self.noise_bounds = (max(noise_bounds[0], NOISE_FLOOR), noise_bounds[1])
        self.mean_bounds = mean_bounds
        self.fixed_noise = fixed_noise

    # parameter vector: [log variance, log lengthscales..., log noise, mean]
    def _unpack(self, p):
        d = self._x.shape[1]
        var = np.exp(p[0])
        ls = np.exp(p[1:1 + d])
        noise = self.fixed_noise if self.fixed_noise is not None else np.exp(p[1 + d])
        return var, ls, noise, p[-1]

    def _nll(self, p):
        x, y = self._x, self._y
        n, d = x.shape
        var, ls, noise, c = self._unpack(p)
        diff = x[:, None, :] - x[None, :, :]
        dd = (diff / ls) ** 2
        r = np.sqrt(dd.sum(-1))
        e = np.exp(-SQRT5 * r)
        k = var * (1 + SQRT5 * r + 5 / 3 * r * r) * e
        kn = k + (noise + 1e-12) * np.eye(n)
        try:
            chol = cholesky(kn, lower=True)
        except np.linalg.LinAlgError:
            return 1e25, np.zeros_like(p)
        res = y - c
        alpha = cho_solve((chol, True), res)
        nll = 0.5 * res @ alpha + np.log(np.diag(chol)).sum() + 0.5 * n * np.log(2 * np.pi)
        w = cho_solve((chol, True), np.eye(n)) - np.outer(alpha, alpha)
        g = np.empty_like(p)
        g[0] = 0.5 * np.sum(w * k)
        base = var * 5 / 3 * (1 + SQRT5 * r) * e
        for j in range(d):
            g[1 + j] = 0.5 * np.sum(w * base * dd[:, :, j])
        if self.fixed_noise is None:
            g[1 + d] = 0.5 * noise * np.trace(w)
        g[-1] = -alpha.sum()
        return nll, g

    def _bounds(self, d):
        b = [tuple(np.log(self.variance_bounds))]
        b += [tuple(np.log(self.lengthscale_bounds))] * d
        if self.fixed_noise is None:
            b.append(tuple(np.log(self.noise_bounds)))
        b.append(self.mean_bounds)
        return b

    def fit(self, x, y, rng: np.random.Generator | None = None) -> "GaussianProcess":
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
        self._y_shift = float(y.mean())
        scale = float(y.std())
        self._y_scale = scale if scale > 0 else 1.0
        self._x = x
        self._y = (y - self._y_shift) / self._y_scale
        n, d = x.shape
        bounds = self._bounds(d)
        lo = np.array([b[0] for b in bounds])
        hi = np.array([b[1] for b in bounds])
        p0 = [np.log(1.0)] + [np.log(0.5)] * d
        if self.fixed_noise is None:
            p0.append(np.log(1e-4))
        p0.append(0.0)
        starts = [np.clip(np.array(p0), lo, hi)]
        rng = rng or np.random.default_rng(0)
        for _ in range(self.n_restarts - 1):
            starts.append(rng.uniform(lo, hi))
        best = None
        for s in starts:
            r = minimize(self._nll, s, jac=True, method="L-BFGS-B", bounds=bounds,
                         options={"maxiter": 200})
            if best is None or r.fun < best.fun:
                best = r
        self.params_ = best.x
        self.nll_ = float(best.fun)
        self._factor()
        return self

    def _factor(self):
        var, ls, noise, c = self._unpack(self.params_)
        self.variance_, self.lengthscales_, self.noise_, self.mean_ = var, ls, noise, c
        n = len(self._y)
        k = matern52(self._x, self._x, ls, var) + (noise + 1e-12) * np.eye(n)
        jitter = 0.0
        while True:
            try:
                self._chol = cholesky(k + jitter * np.eye(n), lower=True)
                break
            except np.linalg.LinAlgError:
                jitter = max(jitter * 10, 1e-10 * var)
        self._alpha = cho_solve((self._chol, True), self._y - c)

    def predict(self, xs, include_noise: bool = False):
        """Posterior mean and standard deviation at the rows of ``xs`` (original units)."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        ks = matern52(xs, self._x, self.lengthscales_, self.variance_)
        mu = self.mean_ + ks @ self._alpha
        v = solve_triangular(self._chol, ks.T, lower=True)
        var = self.variance_ - np.sum(v * v, axis=0)
        if include_noise:
            var = var + self.noise_
        var = np.maximum(var, 0.0)
        return (mu * self._y_scale + self._y_shift, np.sqrt(var) * self._y_scale)
