"""Tests for the estimator-style front end."""

import numpy as np
import pytest

from lxspline import LocalExtremaSplineRegressor
from lxspline.errors import InsufficientDataError


def toy_xy(n=30, seed=0):
    rng = np.random.default_rng(seed)
    xs = np.linspace(0, 1, n)
    ys = 10 * (xs - 0.5) ** 2 + rng.normal(0, 0.5, n)
    return xs, ys


def tiny_regressor(**kw):
    kw.setdefault("n_iters", 400)
    kw.setdefault("burn_in", 100)
    kw.setdefault("temperatures", (0.5, 1.0))
    return LocalExtremaSplineRegressor(**kw)


class TestParams:
    def test_get_set_roundtrip(self):
        est = LocalExtremaSplineRegressor(h=1, seed=3)
        params = est.get_params()
        assert params["h"] == 1 and params["seed"] == 3
        est.set_params(h=2, n_iters=100)
        assert est.h == 2 and est.n_iters == 100

    def test_unknown_param_rejected(self):
        with pytest.raises(ValueError):
            LocalExtremaSplineRegressor().set_params(wiggle=1)

    def test_clone_style_reconstruction(self):
        est = tiny_regressor(h=1, seed=9)
        clone = LocalExtremaSplineRegressor(**est.get_params())
        assert clone.get_params() == est.get_params()


class TestFitPredict:
    def test_fit_predict_shapes(self):
        xs, ys = toy_xy()
        est = tiny_regressor(seed=1).fit(xs, ys)
        assert len(est.draws_) == 300
        grid = np.linspace(0, 1, 17)
        pred = est.predict(grid)
        assert pred.shape == (17,)
        assert np.all(np.isfinite(pred))

    def test_interval_brackets_mean(self):
        xs, ys = toy_xy()
        est = tiny_regressor(seed=2).fit(xs, ys)
        grid = np.linspace(0, 1, 9)
        lower, upper = est.predict_interval(grid, level=0.9)
        pred = est.predict(grid)
        assert np.all(lower <= pred + 1e-12)
        assert np.all(pred <= upper + 1e-12)
        lo50, hi50 = est.predict_interval(grid, level=0.5)
        assert np.all(lo50 >= lower - 1e-12) and np.all(hi50 <= upper + 1e-12)

    def test_not_fitted_error(self):
        with pytest.raises(AttributeError):
            LocalExtremaSplineRegressor().predict([0.5])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            tiny_regressor().fit([0.1, 0.2], [1.0, 2.0, 3.0])

    def test_insufficient_data(self):
        with pytest.raises(InsufficientDataError):
            tiny_regressor().fit([0.1, 0.2, 0.3], [1.0, 2.0, 3.0])

    def test_deterministic_given_seed(self):
        xs, ys = toy_xy()
        a = tiny_regressor(seed=5).fit(xs, ys)
        b = tiny_regressor(seed=5).fit(xs, ys)
        grid = np.linspace(0, 1, 11)
        assert np.array_equal(a.predict(grid), b.predict(grid))
        c = tiny_regressor(seed=6).fit(xs, ys)
        assert not np.array_equal(a.predict(grid), c.predict(grid))

    def test_score_beats_constant_on_clean_signal(self):
        rng = np.random.default_rng(3)
        xs = np.linspace(0, 1, 60)
        ys = 10 * xs + rng.normal(0, 0.2, 60)
        est = tiny_regressor(seed=7, n_iters=1500, burn_in=500).fit(xs, ys)
        assert est.score(xs, ys) > 0.8

    def test_custom_interval_passthrough(self):
        xs, ys = toy_xy()
        est = tiny_regressor(seed=8, interval=(0.0, 2.0)).fit(xs, ys)
        assert est.data_.interval == (0.0, 2.0)
        assert np.all(np.isfinite(est.predict(np.linspace(0, 2, 7))))
