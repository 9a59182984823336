"""Multivariate normal orthant probabilities P(X >= lower).

The estimator is the Genz separation-of-variables transform: a Cholesky
factorization with variable reordering, the first coordinate integrated
analytically, and the rest averaged over a randomly shifted rank-1 lattice
(square-root-of-primes generators).  A plain Monte Carlo oracle is kept
alongside for cross-validation.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import _kernels
from .errors import MatrixError

MAX_DIM = 16
DEFAULT_TARGET = 1e-4
DEFAULT_SHIFTS = 12
MAX_POINTS = 2**17

_PRIMES = np.array([2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47])


@dataclass(frozen=True)
class OrthantProblem:
    mean: np.ndarray
    cov: np.ndarray
    lower: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "lower", lower)
        d = mean.size
        if cov.shape != (d, d) or lower.size != d:
            raise MatrixError("dimension mismatch between mean, cov, lower")
        if d > MAX_DIM:
            raise MatrixError(f"dimension {d} exceeds the supported {MAX_DIM}")
        if not np.allclose(cov, cov.T, atol=1e-10):
            raise MatrixError("covariance must be symmetric to 1e-10")

    @property
    def dim(self) -> int:
        return self.mean.size


def _repaired_cov(cov: np.ndarray) -> np.ndarray:
    """Symmetrize and, if needed, add one shot of diagonal jitter."""
    sym = 0.5 * (cov + cov.T)
    try:
        np.linalg.cholesky(sym + 1e-14 * np.eye(sym.shape[0]))
        return sym
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-10 * max(np.max(np.diag(sym)), 1.0)
    sym = sym + jitter * np.eye(sym.shape[0])
    try:
        np.linalg.cholesky(sym)
    except np.linalg.LinAlgError as exc:
        raise MatrixError("covariance not PSD after jitter") from exc
    return sym


def _reordered_cholesky(cov: np.ndarray, a: np.ndarray):
    """Genz's variable-reordering Cholesky for the one-sided region
    {x >= a}: at each step pick the coordinate with the smallest conditional
    tail probability.  Returns (L, a_perm)."""
    d = a.size
    sig = cov.copy()
    a = a.copy()
    L = np.zeros((d, d))
    y = np.zeros(d)
    for i in range(d):
        best, best_p = i, np.inf
        for l in range(i, d):
            s2 = sig[l, l] - np.dot(L[l, :i], L[l, :i])
            if s2 <= 1e-14:
                continue
            al = (a[l] - np.dot(L[l, :i], y[:i])) / math.sqrt(s2)
            p = 1.0 - ndtr(al)  # upper-tail mass of this coordinate
            if p < best_p:
                best, best_p = l, p
        if best != i:
            sig[[i, best], :] = sig[[best, i], :]
            sig[:, [i, best]] = sig[:, [best, i]]
            L[[i, best], :i] = L[[best, i], :i]
            a[[i, best]] = a[[best, i]]
        s2 = sig[i, i] - np.dot(L[i, :i], L[i, :i])
        if s2 <= 0:
            if s2 < -1e-8 * max(1.0, sig[i, i]):
                raise MatrixError("covariance not PSD in reordered Cholesky")
            s2 = 1e-14
        L[i, i] = math.sqrt(s2)
        for l in range(i + 1, d):
            L[l, i] = (sig[l, i] - np.dot(L[l, :i], L[i, :i])) / L[i, i]
        # conditional-mean proxy used only for the ordering heuristic
        ai = (a[i] - np.dot(L[i, :i], y[:i])) / L[i, i]
        ai = min(max(ai, -37.0), 37.0)
        tail = 1.0 - ndtr(ai)
        dens = math.exp(-0.5 * ai * ai) / math.sqrt(2 * math.pi)
        y[i] = dens / max(tail, 1e-300)
    return L, a


def orthant_prob(
    problem: OrthantProblem,
    target: float = DEFAULT_TARGET,
    rng: np.random.Generator | None = None,
    n_shifts: int = DEFAULT_SHIFTS,
    start_points: int = 256,
    max_points: int = MAX_POINTS,
) -> tuple[float, float]:
    """Estimate P(X >= lower) with estimated standard error below `target`
    (or the point cap reached).  Returns (estimate, error estimate)."""
    if rng is None:
        rng = np.random.default_rng()
    finite = np.isfinite(problem.lower)
    a_raw = problem.lower - problem.mean
    if not np.all(finite):
        if not np.any(finite):
            return 1.0, 0.0
        idx = np.flatnonzero(finite)
        sub = OrthantProblem(
            problem.mean[idx], problem.cov[np.ix_(idx, idx)], problem.lower[idx]
        )
        return orthant_prob(sub, target, rng, n_shifts, start_points, max_points)
    cov = _repaired_cov(problem.cov)
    if problem.dim == 1:
        sd = math.sqrt(cov[0, 0])
        return float(ndtr(-a_raw[0] / sd)), 0.0
    L, a = _reordered_cholesky(cov, a_raw)
    gens = np.sqrt(_PRIMES[: problem.dim - 1].astype(float)) % 1.0
    n = start_points
    while True:
        shifts = rng.random((n_shifts, problem.dim - 1))
        means = _kernels.qmc_orthant_means(L, a, n, gens, shifts)
        est = float(np.mean(means))
        se = float(np.std(means, ddof=1) / math.sqrt(n_shifts))
        if se <= target or n >= max_points:
            return min(max(est, 0.0), 1.0), se
        n *= 2


def mc_oracle(
    problem: OrthantProblem, n_samples: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Plain Monte Carlo indicator average with binomial standard error."""
    finite = np.isfinite(problem.lower)
    if not np.any(finite):
        return 1.0, 0.0
    cov = _repaired_cov(problem.cov)
    L = np.linalg.cholesky(cov)
    hits = 0
    chunk = 200_000
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        z = rng.standard_normal((m, problem.dim)) @ L.T + problem.mean
        hits += int(np.sum(np.all(z >= problem.lower, axis=1)))
        done += m
    p = hits / n_samples
    se = math.sqrt(max(p * (1 - p), 1e-12) / n_samples)
    return p, se
