"""Parameter state, priors, likelihood and curve evaluation.

The predictor is affinely rescaled to the working interval (-0.5, 0.5); the
dyadic tree labels in [0, 1] map onto it by subtracting 0.5.  Responses are
left in their original units.
"""

import json
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np
from scipy import special, stats

from . import tree as tree_mod
from .basis import LxBasis, KnotVector
from .errors import DomainError, InsufficientDataError
from .tree import KnotTree

WORKING_LO = -0.5
WORKING_HI = 0.5


def default_bounds(interval) -> tuple[float, float]:
    """Change-point prior bounds: pad the interval by half its width on each
    side."""
    lo, hi = float(interval[0]), float(interval[1])
    if not hi > lo:
        raise DomainError(f"degenerate interval [{lo}, {hi}]")
    delta = (hi - lo) / 2.0
    return lo - delta, hi + delta


@dataclass(frozen=True)
class Dataset:
    """Paired observations on a closed predictor interval."""

    xs: np.ndarray
    ys: np.ndarray
    interval: tuple[float, float]

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        lo, hi = float(self.interval[0]), float(self.interval[1])
        object.__setattr__(self, "interval", (lo, hi))
        if xs.shape != ys.shape or xs.ndim != 1:
            raise DomainError("xs and ys must be equal-length 1-d sequences")
        if not hi > lo:
            raise DomainError(f"degenerate interval [{lo}, {hi}]")
        if xs.size and (xs.min() < lo or xs.max() > hi):
            raise DomainError("observations outside the declared interval")

    @classmethod
    def from_xy(cls, xs, ys, interval=None) -> "Dataset":
        xs = np.asarray(xs, dtype=float)
        if interval is None:
            if xs.size < 2:
                raise InsufficientDataError("need at least 2 observations")
            interval = (float(xs.min()), float(xs.max()))
        return cls(xs, np.asarray(ys, dtype=float), interval)

    @property
    def n(self) -> int:
        return self.xs.size

    def to_working(self, x) -> np.ndarray:
        lo, hi = self.interval
        return (np.asarray(x, dtype=float) - lo) / (hi - lo) + WORKING_LO

    def from_working(self, u) -> np.ndarray:
        lo, hi = self.interval
        return (np.asarray(u, dtype=float) - WORKING_LO) * (hi - lo) + lo

    @property
    def xs_working(self) -> np.ndarray:
        return self.to_working(self.xs)


# Defaults: order-2 splines with |M| = 100; Be(2,18) keeps the prior zero
# fraction of the coefficients near 0.1; Ga(0.2,2) favors small rates.
@dataclass(frozen=True)
class Hyperparameters:
    h: int = 2
    order: int = 2
    m: float = 100.0
    nu: float = 2.0
    omega: float = 18.0
    delta: float = 0.2
    kappa: float = 2.0
    lambda_floor: float = 1e-5
    c: float = 100.0
    sigma2_shape: float = 1.0
    sigma2_rate: float = 1.0
    a: float = field(default=None)
    b: float = field(default=None)
    # The change-point prior mean is (b-a)/2 as written, which is not the
    # interval midpoint; override here to recenter it.
    alpha_prior_mean: float = field(default=None)
    min_alpha_sep: float = 1e-6

    def __post_init__(self):
        if self.a is None or self.b is None:
            a, b = default_bounds((WORKING_LO, WORKING_HI))
            object.__setattr__(self, "a", a if self.a is None else self.a)
            object.__setattr__(self, "b", b if self.b is None else self.b)
        if self.h < 0 or not 1 <= self.order:
            raise DomainError("need h >= 0 and order >= 1")
        if self.m == 0:
            raise DomainError("m must be nonzero")
        if not (self.a < WORKING_LO and self.b > WORKING_HI):
            raise DomainError("need a < working lo and b > working hi")
        for name in ("nu", "omega", "delta", "kappa", "lambda_floor", "c",
                     "sigma2_shape", "sigma2_rate"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")

    @property
    def alpha_mean(self) -> float:
        if self.alpha_prior_mean is not None:
            return self.alpha_prior_mean
        return (self.b - self.a) / 2.0

    @classmethod
    def from_dict(cls, doc: dict) -> "Hyperparameters":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise DomainError(f"unknown hyperparameter fields: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, path) -> "Hyperparameters":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def replace(self, **kw) -> "Hyperparameters":
        return replace(self, **kw)


@dataclass(frozen=True)
class ModelState:
    """One point in the trans-dimensional parameter space (working units)."""

    tree: KnotTree
    beta0: float
    beta: np.ndarray
    alpha: np.ndarray
    pi: float
    lam: float
    sigma2: float

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))

    def n_coef(self, hp: Hyperparameters) -> int:
        return len(self.tree) + 2 + hp.order - 1  # K + j - 1, K = nodes + ends

    def is_valid(self, hp: Hyperparameters) -> bool:
        if np.any(self.beta < 0):
            return False
        if self.beta.size != self.n_coef(hp):
            return False
        if self.alpha.size != hp.h:
            return False
        if np.any(self.alpha < hp.a) or np.any(self.alpha > hp.b):
            return False
        if self.alpha.size > 1:
            if np.min(np.diff(np.sort(self.alpha))) < hp.min_alpha_sep:
                return False
        if not 0 < self.pi < 1 or self.lam <= hp.lambda_floor or self.sigma2 <= 0:
            return False
        return True

    def to_dict(self) -> dict:
        return {
            "tree": self.tree.serialize(),
            "beta0": self.beta0,
            "beta": self.beta.tolist(),
            "alpha": self.alpha.tolist(),
            "pi": self.pi,
            "lambda": self.lam,
            "sigma2": self.sigma2,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelState":
        return cls(
            tree=KnotTree.from_labels(doc["tree"]),
            beta0=doc["beta0"],
            beta=np.asarray(doc["beta"], dtype=float),
            alpha=np.asarray(doc["alpha"], dtype=float),
            pi=doc["pi"],
            lam=doc["lambda"],
            sigma2=doc["sigma2"],
        )


def working_knots(tree: KnotTree) -> np.ndarray:
    """Knot set in working units: labels in [0,1] shifted by -0.5."""
    return tree.knot_array() - 0.5


def basis_for(state: ModelState, hp: Hyperparameters) -> LxBasis:
    kv = KnotVector(working_knots(state.tree), hp.order)
    return LxBasis(kv, state.alpha, hp.m, min_alpha_sep=hp.min_alpha_sep)


def _log_trunc_gamma(lam: float, hp: Hyperparameters) -> float:
    dist = stats.gamma(hp.delta, scale=1.0 / hp.kappa)
    tail = dist.sf(hp.lambda_floor)
    return float(dist.logpdf(lam) - math.log(tail))


def _log_trunc_normal(x, hp: Hyperparameters) -> float:
    mean = hp.alpha_mean
    z = stats.norm(mean, 1.0)
    denom = z.cdf(hp.b) - z.cdf(hp.a)
    return float(np.sum(z.logpdf(x)) - x.size * math.log(denom))


def log_prior(state: ModelState, hp: Hyperparameters) -> float:
    """Joint log prior; -inf whenever any state invariant is violated."""
    if not state.is_valid(hp):
        return -math.inf
    total = tree_mod.log_prior(state.tree)
    zero = state.beta == 0
    total += float(np.sum(zero)) * math.log(state.pi)
    nz = state.beta[~zero]
    total += nz.size * (math.log1p(-state.pi) + math.log(state.lam))
    total += -state.lam * float(nz.sum())
    total += float(stats.norm(0.0, math.sqrt(hp.c)).logpdf(state.beta0))
    total += float(stats.beta(hp.nu, hp.omega).logpdf(state.pi))
    total += _log_trunc_gamma(state.lam, hp)
    total += _log_trunc_normal(state.alpha, hp)
    # precision-parameterized variance prior
    total += float(
        stats.gamma(hp.sigma2_shape, scale=1.0 / hp.sigma2_rate).logpdf(
            1.0 / state.sigma2
        )
    ) - 2.0 * math.log(state.sigma2)
    return total


def fitted_values(state: ModelState, hp: Hyperparameters, xs_working) -> np.ndarray:
    X = basis_for(state, hp).design_matrix(xs_working)
    return X @ np.concatenate([[state.beta0], state.beta])


def log_likelihood(state: ModelState, data: Dataset, hp: Hyperparameters) -> float:
    if state.sigma2 <= 0:
        raise DomainError("sigma2 must be positive")
    resid = data.ys - fitted_values(state, hp, data.xs_working)
    n = data.n
    return float(
        -0.5 * n * math.log(2 * math.pi * state.sigma2)
        - 0.5 * float(resid @ resid) / state.sigma2
    )


def curve_eval(state: ModelState, data: Dataset, hp: Hyperparameters, xs) -> np.ndarray:
    """Fitted curve at original-unit points xs."""
    return fitted_values(state, hp, data.to_working(xs))


def shape_signature(state: ModelState) -> tuple[int, int, int]:
    """(#alpha below, #alpha interior, #alpha above) the working interval."""
    below = int(np.sum(state.alpha <= WORKING_LO))
    above = int(np.sum(state.alpha >= WORKING_HI))
    return below, state.alpha.size - below - above, above


def sample_trunc_gamma(shape, rate, floor, rng: np.random.Generator) -> float:
    """Inverse-CDF draw from Gamma(shape, rate) truncated to (floor, inf)."""
    lo = float(special.gammainc(shape, rate * floor))
    u = lo + rng.random() * (1.0 - lo)
    val = float(special.gammaincinv(shape, min(u, 1.0 - 1e-16))) / rate
    return max(val, floor * (1 + 1e-12))


def sample_alpha_prior(hp: Hyperparameters, rng: np.random.Generator) -> np.ndarray:
    """IID truncated-normal change points, redrawn until separated."""
    mean = hp.alpha_mean
    lo, hi = (hp.a - mean), (hp.b - mean)
    for _ in range(1000):
        alpha = stats.truncnorm.rvs(lo, hi, loc=mean, scale=1.0,
                                    size=hp.h, random_state=rng)
        if hp.h <= 1 or np.min(np.diff(np.sort(alpha))) >= hp.min_alpha_sep:
            return np.asarray(alpha, dtype=float)
    raise DomainError("could not draw separated change points")


def sample_prior_state(hp: Hyperparameters, rng: np.random.Generator) -> ModelState:
    """Generative counterpart of log_prior."""
    t = tree_mod.sample_tree(rng)
    pi = float(rng.beta(hp.nu, hp.omega))
    lam = sample_trunc_gamma(hp.delta, hp.kappa, hp.lambda_floor, rng)
    n_coef = len(t) + 2 + hp.order - 1
    beta = np.where(
        rng.random(n_coef) < pi, 0.0, rng.exponential(1.0 / lam, size=n_coef)
    )
    beta0 = float(rng.normal(0.0, math.sqrt(hp.c)))
    alpha = sample_alpha_prior(hp, rng)
    precision = rng.gamma(hp.sigma2_shape, 1.0 / hp.sigma2_rate)
    return ModelState(t, beta0, beta, alpha, pi, lam, float(1.0 / precision))
