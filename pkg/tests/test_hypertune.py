import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from grateid.dataset import ExperimentSet, Record, assign_groups, split_experiments
from grateid.errors import InvalidCounts, NoFeasiblePoint, ValidationError
from grateid.estimator import FitObjective, IdentData, predict, staged_fit
from grateid.hypertune import (
    GaussianProcess,
    HyperParams,
    HyperSpace,
    ObservationSet,
    expected_improvement,
    kfold_objective,
    matern52,
    probability_of_feasibility,
    propose_next,
    tune,
)
from grateid.ltimodel import ProcessModel
from grateid.synth import setpoint_program


# ---------------------------------------------------------------------------
# acquisition

class TestExpectedImprovement:
    def test_phi_zero(self):
        assert expected_improvement(1.3, 1.0, 1.3) == pytest.approx(0.3989422804, abs=1e-10)

    def test_zero_sigma(self):
        assert expected_improvement(2.0, 0.0, 1.0) == 0.0
        assert expected_improvement(0.25, 0.0, 1.0) == 0.75

    def test_negative_sigma(self):
        with pytest.raises(ValueError):
            expected_improvement(0.0, -1.0, 0.0)

    def test_monotone_in_sigma(self):
        s = np.linspace(0.01, 5, 200)
        ei = expected_improvement(np.zeros_like(s), s, 0.0)
        assert np.all(np.diff(ei) > 0)

    @given(st.floats(-5, 5), st.floats(0.01, 3), st.floats(-5, 5))
    @settings(max_examples=200, deadline=None)
    def test_closed_form_identity(self, mu, sigma, best):
        z = (best - mu) / sigma
        ref = (best - mu) * norm.cdf(z) + sigma * norm.pdf(z)
        assert expected_improvement(mu, sigma, best) == pytest.approx(max(ref, 0.0), abs=1e-12)

    def test_monte_carlo_small(self):
        rng = np.random.default_rng(0)
        mu, s, best = 0.3, 0.7, 0.1
        draws = np.maximum(best - (mu + s * rng.standard_normal(200000)), 0)
        se = draws.std() / np.sqrt(len(draws))
        assert abs(expected_improvement(mu, s, best) - draws.mean()) < 4 * se

    def test_vectorized(self):
        out = expected_improvement(np.array([0.0, 1.0]), np.array([1.0, 0.0]), 0.5)
        assert out.shape == (2,) and out[1] == 0.0


def test_probability_of_feasibility():
    p = probability_of_feasibility(np.array([0.0, 2.0, -1.0, 1.0]), np.array([1.0, 1.0, 0.0, 0.0]))
    np.testing.assert_allclose(p, [0.5, norm.cdf(2.0), 0.0, 1.0])


# ---------------------------------------------------------------------------
# surrogate

class TestGP:
    def test_kernel(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(size=(20, 3))
        k = matern52(x, x, [0.3, 0.5, 1.0], 2.0)
        np.testing.assert_allclose(np.diag(k), 2.0)
        np.testing.assert_allclose(k, k.T)
        assert np.linalg.eigvalsh(k).min() > -1e-10
        # Matern 5/2 at unit scaled distance
        k1 = matern52(np.zeros((1, 1)), np.ones((1, 1)), [1.0], 1.0)[0, 0]
        assert k1 == pytest.approx((1 + np.sqrt(5) + 5 / 3) * np.exp(-np.sqrt(5)))

    def test_interpolates(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(size=(15, 2))
        y = np.sin(4 * x[:, 0]) + x[:, 1] ** 2
        gp = GaussianProcess(fixed_noise=1e-10).fit(x, y, rng)
        mu, sd = gp.predict(x)
        np.testing.assert_allclose(mu, y, atol=1e-4)
        _, sd_far = gp.predict(np.array([[3.0, 3.0]]))
        assert np.all(sd >= 0) and sd.max() < sd_far[0]

    def test_gradient(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(size=(12, 2))
        gp = GaussianProcess()
        gp._x, gp._y = x, rng.standard_normal(12)
        p = np.array([0.2, -0.5, 0.1, np.log(1e-2), 0.3])
        _, g = gp._nll(p)
        h = 1e-6
        num = [(gp._nll(p + h * e)[0] - gp._nll(p - h * e)[0]) / (2 * h) for e in np.eye(len(p))]
        np.testing.assert_allclose(g, num, rtol=1e-5, atol=1e-6)

    def test_constant_targets(self):
        gp = GaussianProcess().fit(np.eye(3), np.ones(3))
        mu, sd = gp.predict(np.eye(3))
        np.testing.assert_allclose(mu, 1.0)


# ---------------------------------------------------------------------------
# space

class TestSpace:
    space = HyperSpace(("a", "b", "c"), ("a",))

    def test_canonical_mandatory_and_contiguous(self):
        eta = self.space.canonical(HyperParams((3, 3, 0), (2, 1, 3), (-1.0, 0.0, 1.0)))
        assert eta.stages == (1, 2, 0)
        assert eta.poles == (2, 1, 1)
        assert eta.log_lams == (-1.0, 1.0, -6.0)

    def test_validate(self):
        with pytest.raises(ValidationError):
            self.space.validate(HyperParams((2, 1, 0), (1, 1, 1), (0, 0, 0)))
        with pytest.raises(ValidationError):
            self.space.validate(HyperParams((1, 3, 0), (1, 1, 1), (0, 0, 0)))

    def test_samples_valid(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            eta = self.space.sample(rng)
            self.space.validate(eta)
            assert eta.stages[0] == 1
            x = self.space.encode(eta)
            assert x.shape == (self.space.dim,) and np.all((0 <= x) & (x <= 1))

    def test_enumerate(self):
        small = HyperSpace(("u1", "u2"), ("u1",), tune_lambda=False)
        pts = small.enumerate()
        # u1 poles (3) x [u2 excluded, or in stage 1/2 with 3 pole counts]
        assert len(pts) == 3 * (1 + 2 * 3)
        assert len({small.encode(p).tobytes() for p in pts}) == len(pts)

    def test_neighbours_are_canonical(self):
        rng = np.random.default_rng(3)
        eta = self.space.sample(rng)
        for nb in self.space.neighbours(eta, rng):
            assert nb == self.space.canonical(nb)

    def test_make_and_stages(self):
        eta = self.space.make({"c": 2}, {"a": 3, "c": 1}, [1e-3, 1e-2, 1e-1])
        st_ = self.space.to_stages(eta)
        assert [s.inputs for s in st_] == [("a",), ("c",)]
        assert st_[0].poles == (3,)
        assert st_[1].lam == pytest.approx(1e-2)


# ---------------------------------------------------------------------------
# k-fold objective

def _noise_problem(seed, n=4320, k=4):
    rng = np.random.default_rng(seed)
    u1 = setpoint_program(n, 5.0, 10, rng=rng) - 0.8
    u2 = 0.2 * rng.standard_normal(n)
    y = ProcessModel(1.0, (300.0,)).simulate(u1, 5.0, "steady") + 0.03 * rng.standard_normal(n)
    rec = Record.from_arrays({"u1": u1, "u2": u2, "y": y}, 5.0)
    eset = assign_groups(split_experiments(rec, "u1", lead_time=60.0), 2, k, seed)
    return IdentData(rec.as_dict(), "y", 5.0, eset.select(eset.train)), eset


def _naive_J(eta, space, data, eset, obj):
    total = 0.0
    for k in range(1, eset.n_folds + 1):
        held = eset.fold(k)
        rest = [i for i in eset.train if i not in held]
        model = staged_fit(space.to_stages(eta), data.with_windows([eset.windows[i] for i in rest]),
                           obj).model
        y_hat = predict(model, data)
        for i in held:
            a, b = eset.windows[i]
            err = 0.0
            for t in range(a, b):
                err += (data.y[t] - y_hat[t]) ** 2
            total += err / (b - a)
    return total / len(eset.train)


class TestKFold:
    space = HyperSpace(("u1", "u2"), ("u1",), tune_lambda=True)
    obj = FitObjective(covariance=False, n_starts=2)

    def test_matches_naive_loop(self):
        data, eset = _noise_problem(0)
        rng = np.random.default_rng(0)
        for _ in range(3):
            eta = self.space.sample(rng)
            J, feasible = kfold_objective(eta, self.space, data, eset, self.obj)
            assert J == pytest.approx(_naive_J(eta, self.space, data, eset, self.obj), rel=1e-12)

    def test_fold_order_invariance(self):
        data, eset = _noise_problem(1)
        perm = {k: 5 - k for k in range(1, 5)}
        swapped = ExperimentSet(eset.windows, eset.groups,
                                tuple(perm.get(f, f) for f in eset.folds))
        eta = self.space.make({"u2": 2}, {"u1": 1, "u2": 1}, [1e-6, 1e-6, 1e-6])
        a = kfold_objective(eta, self.space, data, eset, self.obj).J
        b = kfold_objective(eta, self.space, data, swapped, self.obj).J
        assert a == pytest.approx(b, rel=1e-12)

    def test_leave_one_out_and_k1(self):
        data, eset = _noise_problem(2, k=4)
        n_train = len(eset.train)
        loo = assign_groups(ExperimentSet(eset.windows), 2, n_train, 2)
        eta = self.space.make({}, {"u1": 1})
        res = kfold_objective(eta, self.space, data, loo, self.obj)
        assert len(res.fold_models) == n_train and len(res.experiment_mse) == n_train
        one = assign_groups(ExperimentSet(eset.windows), 2, 1, 2)
        with pytest.raises(InvalidCounts):
            kfold_objective(eta, self.space, data, one, self.obj)

    def test_noiseless_zero(self):
        rng = np.random.default_rng(0)
        n = 4320
        u1 = setpoint_program(n, 5.0, 10, rng=rng)
        y = ProcessModel(0.7, (300.0,)).simulate(u1, 5.0, "steady")
        rec = Record.from_arrays({"u1": u1, "u2": rng.standard_normal(n), "y": y}, 5.0)
        eset = assign_groups(split_experiments(rec, "u1", lead_time=60.0), 2, 4, 0)
        data = IdentData(rec.as_dict(), "y", 5.0, eset.select(eset.train))
        eta = self.space.make({}, {"u1": 1})
        assert kfold_objective(eta, self.space, data, eset, self.obj).J < 1e-8 * np.var(y)

    def test_failed_fold_is_infeasible(self):
        data, eset = _noise_problem(0)
        broken = IdentData({**data.signals, "u2": np.full(len(data.y), np.nan)}, "y", 5.0,
                           data.windows)
        eta = self.space.make({"u2": 1})
        res = kfold_objective(eta, self.space, broken, eset, self.obj)
        assert res.J == math.inf and not res.feasible and res.error


# ---------------------------------------------------------------------------
# proposal and loop

def _toy_space():
    return HyperSpace(("a", "b", "c", "d"), ("a",), tune_lambda=False)


def _toy_objective(eta):
    # deep minimum at b in stage 1 with 2 poles; otherwise flat with a slight pole trend
    J = 1.0 + 0.01 * sum(eta.poles)
    if eta.stages[1] == 1 and eta.poles[1] == 2:
        J -= 0.8
    return J, True


class TestPropose:
    def test_empty_data(self):
        space = _toy_space()
        eta = propose_next(space, ObservationSet(space), np.random.default_rng(0))
        space.validate(eta)

    def test_never_duplicates(self):
        space = HyperSpace(("a", "b"), ("a",), tune_lambda=False)
        res = tune(space, _toy_objective, budget=40, seed=3, n_candidates=200)
        keys = [space.encode(o.eta).tobytes() for o in res.observations]
        assert len(keys) == len(set(keys))
        # the space has 21 points; the loop stops once it is exhausted
        assert len(res.observations) == len(space.enumerate())

    def test_leaves_dense_cluster(self):
        space = _toy_space()
        centre = space.make({"b": 1}, {"a": 1, "b": 2})
        left = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            data = ObservationSet(space)
            data.add(centre, *_toy_objective(centre))
            for nb in space.neighbours(centre):
                data.add(nb, *_toy_objective(nb))
            eta = propose_next(space, data, rng, gp_restarts=1)
            dist = sum(x != y for x, y in zip(space.encode(eta), space.encode(centre)))
            left += dist >= 2
        assert left > 0

    def test_finds_minimum_of_toy(self):
        space = _toy_space()
        res = tune(space, _toy_objective, budget=30, seed=0, gp_restarts=1)
        assert res.best.stages[1] == 1 and res.best.poles[1] == 2


class TestTune:
    def test_budget_one(self):
        space = _toy_space()
        calls = []

        def f(eta):
            calls.append(eta)
            return _toy_objective(eta)

        res = tune(space, f, budget=1, seed=0)
        assert len(calls) == 1 and res.best == calls[0]
        assert res.trace[0]["incumbent_J"] == res.best_J

    def test_no_feasible(self):
        with pytest.raises(NoFeasiblePoint):
            tune(_toy_space(), lambda eta: (1.0, False), budget=3, seed=0, gp_restarts=1)

    def test_initial_points_free_and_bounding(self):
        space = _toy_space()
        init = [space.make({}, {"a": 3}), space.make({"c": 1}, {"a": 1, "c": 3})]
        res = tune(space, _toy_objective, budget=5, seed=1, initial=init, gp_restarts=1)
        assert sum(t["source"] == "bo" for t in res.trace) == 5
        assert sum(t["source"] == "initial" for t in res.trace) == 2
        assert res.best_J <= min(_toy_objective(e)[0] for e in init)

    @given(st.integers(0, 1000))
    @settings(max_examples=5, deadline=None)
    def test_incumbent_monotone(self, seed):
        space = _toy_space()
        rng = np.random.default_rng(seed)
        noise = {}

        def f(eta):
            key = space.encode(eta).tobytes()
            noise.setdefault(key, rng.uniform())
            return noise[key], noise[key] > 0.2

        try:
            res = tune(space, f, budget=8, seed=seed, gp_restarts=1, n_candidates=300)
        except NoFeasiblePoint:
            return
        inc = [t["incumbent_J"] for t in res.trace if t["incumbent_J"] is not None]
        assert all(b <= a for a, b in zip(inc, inc[1:]))
        assert all(t["feasible"] or t["incumbent_J"] != t["J"] or t["incumbent_J"] is None
                   for t in res.trace)

    def test_deterministic(self):
        space = _toy_space()
        a = tune(space, _toy_objective, budget=6, seed=11, gp_restarts=1)
        b = tune(space, _toy_objective, budget=6, seed=11, gp_restarts=1)
        assert a.trace == b.trace
