"""B-splines and local extrema splines.

A curve with at most H interior extrema is represented as

    f(x) = beta_0 + sum_k beta_k * Bstar_k(x),

where each Bstar_k is the scaled antiderivative of the product of a degree-H
polynomial with roots at the change points and an ordinary B-spline.  With
beta_k >= 0 the derivative's sign is controlled entirely by the polynomial
factor, so sign changes can only happen at the change points.

Knot-sequence convention: for a knot set tau_1 <= ... <= tau_K (end knots
included) and order j, the ends are padded to multiplicity j+1 and the first
(identically zero) spline is dropped, leaving exactly K+j-1 indexed basis
functions B_1..B_{K+j-1}.  The trailing function is degenerate (identically
zero); its design column is zero and its coefficient is pinned to 0 by the
samplers.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import _kernels
from .errors import (
    BasisIndexError,
    ConstraintViolationError,
    DegenerateAlphaError,
    DomainError,
)

MAX_ORDER = 6
MIN_ALPHA_SEP = 1e-6


@lru_cache(maxsize=None)
def gauss_legendre_rule(q: int):
    """Cached q-point Gauss-Legendre nodes and weights on [-1, 1]."""
    gx, gw = leggauss(q)
    gx.flags.writeable = False
    gw.flags.writeable = False
    return gx, gw


@dataclass(frozen=True)
class KnotVector:
    """Sorted knot set (end knots included) plus the spline order."""

    knots: np.ndarray
    order: int

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        object.__setattr__(self, "knots", knots)
        if not 1 <= self.order <= MAX_ORDER:
            raise DomainError(f"order must be in [1, {MAX_ORDER}], got {self.order}")
        if knots.ndim != 1 or np.unique(knots).size < 2:
            raise DomainError("need at least 2 distinct knots")
        if np.any(np.diff(knots) < 0):
            raise DomainError("knots must be sorted")

    @property
    def n_basis(self) -> int:
        """Number of (non-intercept) basis functions: K + order - 1."""
        return self.knots.size + self.order - 1

    @property
    def lo(self) -> float:
        return float(self.knots[0])

    @property
    def hi(self) -> float:
        return float(self.knots[-1])

    @property
    def padded(self) -> np.ndarray:
        j = self.order
        return np.concatenate(
            [np.full(j, self.knots[0]), self.knots, np.full(j, self.knots[-1])]
        )

    def support(self, k: int) -> tuple[float, float]:
        """Open support interval of basis function k (full padded index k)."""
        self._check_index(k)
        t = self.padded
        return float(t[k]), float(t[k + self.order])

    def defining_knots(self, k: int) -> tuple:
        """The order+1 consecutive padded knots that define basis function k.
        Two basis functions (possibly from different knot sets) are the same
        function iff these tuples are equal."""
        self._check_index(k)
        t = self.padded
        return tuple(t[k : k + self.order + 1])

    def _check_index(self, k: int) -> None:
        if not 1 <= k <= self.n_basis:
            raise BasisIndexError(f"basis index {k} outside 1..{self.n_basis}")

    def _check_domain(self, xs: np.ndarray) -> None:
        if np.any(xs < self.lo) or np.any(xs > self.hi):
            raise DomainError(
                f"points outside knot span [{self.lo}, {self.hi}]"
            )


def bspline_eval(knots: KnotVector, k: int, x: float) -> float:
    """Value of the order-j B-spline with index k at x."""
    knots._check_index(k)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    knots._check_domain(xs)
    full = _kernels.bspline_design(knots.padded, knots.order, xs)
    return float(full[0, k])


def bspline_design(knots: KnotVector, xs) -> np.ndarray:
    """Matrix of all K+order-1 B-splines at the given points (no intercept).
    Column k-1 holds B_k."""
    xs = np.asarray(xs, dtype=float)
    knots._check_domain(xs)
    full = _kernels.bspline_design(knots.padded, knots.order, xs)
    return full[:, 1:]


@dataclass(frozen=True)
class PiecewisePoly:
    """Piecewise polynomial in local power form: on [b_i, b_{i+1}] the value
    is sum_m coeffs[i, m] * (x - b_i)**m."""

    breakpoints: np.ndarray
    coeffs: np.ndarray  # (n_intervals, degree+1)

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        cf = np.asarray(self.coeffs, dtype=float)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "coeffs", cf)
        if bp.size < 2 or np.any(np.diff(bp) <= 0):
            raise DomainError("breakpoints must be strictly increasing")
        if cf.shape[0] != bp.size - 1:
            raise DomainError("one coefficient row per interval required")

    @classmethod
    def from_callable(cls, fn, breakpoints, degree: int) -> "PiecewisePoly":
        """Interpolate fn on each interval at Chebyshev points; exact when fn
        is a polynomial of the given degree on every interval."""
        bp = np.asarray(breakpoints, dtype=float)
        rows = []
        nodes = np.cos(np.pi * (2 * np.arange(degree + 1) + 1) / (2 * (degree + 1)))
        for i in range(bp.size - 1):
            a, b = bp[i], bp[i + 1]
            x = 0.5 * (a + b) + 0.5 * (b - a) * nodes
            vals = np.asarray([fn(float(v)) for v in x])
            # local coordinates about the interval start
            V = np.vander(x - a, degree + 1, increasing=True)
            rows.append(np.linalg.solve(V, vals))
        return cls(bp, np.vstack(rows))

    def __call__(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        bp = self.breakpoints
        if np.any(xs < bp[0] - 1e-12) or np.any(xs > bp[-1] + 1e-12):
            raise DomainError("evaluation outside breakpoint span")
        ix = np.clip(np.searchsorted(bp, xs, side="right") - 1, 0, bp.size - 2)
        loc = xs - bp[ix]
        out = np.zeros_like(xs)
        for m in range(self.coeffs.shape[1] - 1, -1, -1):
            out = out * loc + self.coeffs[ix, m]
        return out if np.ndim(x) else float(out[0])

    def antiderivative(self) -> "PiecewisePoly":
        """Continuous antiderivative vanishing at the first breakpoint."""
        n_int, deg1 = self.coeffs.shape
        widths = np.diff(self.breakpoints)
        new = np.zeros((n_int, deg1 + 1))
        new[:, 1:] = self.coeffs / np.arange(1, deg1 + 1)
        running = 0.0
        for i in range(n_int):
            new[i, 0] = running
            running = np.polynomial.polynomial.polyval(widths[i], new[i])
        return PiecewisePoly(self.breakpoints, new)

    def integrate(self, a: float, b: float) -> float:
        F = self.antiderivative()
        return float(F(b) - F(a))


@dataclass(frozen=True)
class LxBasis:
    """Local extrema spline basis: knot set, change points, sign/scale."""

    knots: KnotVector
    alpha: np.ndarray
    m_scale: float
    intercept: bool = True
    min_alpha_sep: float = MIN_ALPHA_SEP
    _gl: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        object.__setattr__(self, "alpha", alpha)
        if self.m_scale == 0:
            raise DomainError("m_scale must be nonzero")
        if alpha.size > 1:
            sep = np.min(np.diff(np.sort(alpha)))
            if sep < self.min_alpha_sep:
                raise DegenerateAlphaError(
                    f"change points closer than {self.min_alpha_sep}"
                )
        q = (self.knots.order + alpha.size + 1 + 1) // 2  # ceil((j+H+1)/2)
        object.__setattr__(self, "_gl", gauss_legendre_rule(q))

    @property
    def n_extrema(self) -> int:
        return self.alpha.size

    @property
    def n_columns(self) -> int:
        """Design-matrix width: intercept (if present) + K+order-1."""
        return self.knots.n_basis + (1 if self.intercept else 0)

    def design_matrix(self, xs) -> np.ndarray:
        """n x (K+order) matrix; column 0 is the intercept, column k holds
        Bstar_k.  Integration is exact (degree-matched Gauss-Legendre)."""
        xs = np.asarray(xs, dtype=float)
        self.knots._check_domain(xs)
        gx, gw = self._gl
        full = _kernels.lx_design(
            self.knots.padded,
            self.knots.order,
            self.knots.knots,
            self.alpha,
            float(self.m_scale),
            np.ascontiguousarray(xs, dtype=float),
            gx,
            gw,
        )
        return full if self.intercept else full[:, 1:]

    def integrand_poly(self, k: int) -> PiecewisePoly:
        """Exact piecewise-polynomial form of prod_h(x-alpha_h) * B_k(x)."""
        kv = self.knots

        def fn(x):
            return float(np.prod(x - self.alpha)) * bspline_eval(kv, k, x)

        return PiecewisePoly.from_callable(
            fn, kv.knots, kv.order - 1 + self.alpha.size
        )


def lx_basis_eval(basis: LxBasis, k: int, x: float) -> float:
    """Value of Bstar_k at x (k = 0 is the intercept)."""
    if k == 0:
        if not basis.intercept:
            raise BasisIndexError("basis has no intercept column")
        return 1.0
    basis.knots._check_index(k)
    row = basis.design_matrix(np.asarray([x], dtype=float))
    return float(row[0, k if basis.intercept else k - 1])


def lx_design_matrix(basis: LxBasis, xs) -> np.ndarray:
    """Vectorized lx_basis_eval over points; column 0 is the intercept."""
    return basis.design_matrix(xs)


def lx_derivative_eval(basis: LxBasis, coeffs, x):
    """Derivative of f = beta_0 + sum_k beta_k Bstar_k via the exact
    factorization m_scale * prod_h(x - alpha_h) * sum_k beta_k B_k(x).

    ``coeffs`` includes the intercept at position 0 when the basis has one.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.size != basis.n_columns:
        raise ConstraintViolationError(
            f"expected {basis.n_columns} coefficients, got {coeffs.size}"
        )
    beta = coeffs[1:] if basis.intercept else coeffs
    if np.any(beta < 0):
        raise ConstraintViolationError("non-intercept coefficients must be >= 0")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    bmat = bspline_design(basis.knots, xs)
    vals = basis.m_scale * _kernels.poly_factor(basis.alpha, xs) * (bmat @ beta)
    return vals if np.ndim(x) else float(vals[0])
