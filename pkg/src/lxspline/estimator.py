"""Estimator-style front end: fit on (X, y), predict posterior-mean curves,
and query pointwise credible bands."""

import numpy as np

from . import model as model_mod
from .errors import InsufficientDataError
from .model import Dataset, Hyperparameters
from .sampler import ChainConfig, run_tempered


class LocalExtremaSplineRegressor:
    """Curve regression constrained to at most ``h`` interior extrema.

    Parameters mirror the model hyperparameters and chain settings; the
    fitted attributes are the posterior draws and diagnostics from the
    tempered sampler.
    """

    def __init__(self, h=2, order=2, m=100.0, interval=None,
                 n_iters=50_000, burn_in=10_000, thin=1, seed=0,
                 temperatures=None, hyperparameters=None, chain_config=None):
        self.h = h
        self.order = order
        self.m = m
        self.interval = interval
        self.n_iters = n_iters
        self.burn_in = burn_in
        self.thin = thin
        self.seed = seed
        self.temperatures = temperatures
        self.hyperparameters = hyperparameters
        self.chain_config = chain_config

    def get_params(self, deep=True):
        return {
            "h": self.h,
            "order": self.order,
            "m": self.m,
            "interval": self.interval,
            "n_iters": self.n_iters,
            "burn_in": self.burn_in,
            "thin": self.thin,
            "seed": self.seed,
            "temperatures": self.temperatures,
            "hyperparameters": self.hyperparameters,
            "chain_config": self.chain_config,
        }

    def set_params(self, **params):
        for key, value in params.items():
            if key not in self.get_params():
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def _resolve(self):
        hp = self.hyperparameters or Hyperparameters(
            h=self.h, order=self.order, m=self.m
        )
        cfg = self.chain_config
        if cfg is None:
            kw = dict(
                n_iters=self.n_iters, burn_in=self.burn_in, thin=self.thin,
                seed=self.seed,
            )
            if self.temperatures is not None:
                kw["temperatures"] = tuple(self.temperatures)
            cfg = ChainConfig(**kw)
        return hp, cfg

    def fit(self, X, y):
        xs = np.asarray(X, dtype=float).reshape(-1)
        ys = np.asarray(y, dtype=float).reshape(-1)
        if xs.size != ys.size:
            raise ValueError("X and y lengths differ")
        hp, cfg = self._resolve()
        if xs.size < hp.order + 2:
            raise InsufficientDataError(
                f"need at least {hp.order + 2} observations"
            )
        data = Dataset.from_xy(xs, ys, self.interval)
        draws, diag = run_tempered(data, hp, cfg)
        self.hp_ = hp
        self.config_ = cfg
        self.data_ = data
        self.draws_ = draws
        self.diagnostics_ = diag
        return self

    def _check_fitted(self):
        if not hasattr(self, "draws_"):
            raise AttributeError("call fit before predicting")

    def _curve_matrix(self, X) -> np.ndarray:
        self._check_fitted()
        xs = np.asarray(X, dtype=float).reshape(-1)
        out = np.empty((len(self.draws_), xs.size))
        for i, d in enumerate(self.draws_):
            out[i] = model_mod.curve_eval(d.model_state(), self.data_, self.hp_, xs)
        return out

    def predict(self, X) -> np.ndarray:
        """Posterior-mean curve at the given points."""
        return self._curve_matrix(X).mean(axis=0)

    def predict_interval(self, X, level=0.95):
        """Pointwise credible band: (lower, upper) quantiles at each point."""
        curves = self._curve_matrix(X)
        lo = (1.0 - level) / 2.0
        return (
            np.quantile(curves, lo, axis=0),
            np.quantile(curves, 1.0 - lo, axis=0),
        )

    def score(self, X, y) -> float:
        """Coefficient of determination of the posterior-mean curve."""
        ys = np.asarray(y, dtype=float).reshape(-1)
        pred = self.predict(X)
        ss_res = float(np.sum((ys - pred) ** 2))
        ss_tot = float(np.sum((ys - ys.mean()) ** 2))
        return 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
