"""Numba-compiled numerical kernels.

Everything here is deliberately loop-based: these routines sit inside the
MCMC inner loop and are compiled once per process (``cache=True`` persists
the compilation across runs).
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def find_span(t, order, x):
    """Index i with t[i] <= x < t[i+1]; x at the right end maps to the last
    nonempty interval so the domain is closed on the right."""
    n = t.shape[0]
    if x >= t[n - 1]:
        i = n - 2
        while i > 0 and t[i] == t[i + 1]:
            i -= 1
        return i
    i = np.searchsorted(t, x, side="right") - 1
    return i


@njit(cache=True)
def basis_row(t, order, span, x, out):
    """Values of the ``order`` B-splines that are nonzero at x (span index
    ``span``), i.e. splines span-order+1 .. span.  Zero-width denominators
    (repeated knots) follow the 0/0 := 0 convention."""
    p = order - 1
    out[0] = 1.0
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    for r in range(1, p + 1):
        left[r] = x - t[span + 1 - r]
        right[r] = t[span + r] - x
        saved = 0.0
        for k in range(r):
            denom = right[k + 1] + left[r - k]
            if denom != 0.0:
                temp = out[k] / denom
            else:
                temp = 0.0
            out[k] = saved + right[k + 1] * temp
            saved = left[r - k] * temp
        out[r] = saved


@njit(cache=True)
def bspline_design(t, order, xs):
    """Design matrix of all len(t)-order B-splines of the given order on the
    padded knot sequence t, evaluated at xs (must lie inside the domain)."""
    m = t.shape[0] - order
    out = np.zeros((xs.shape[0], m))
    row = np.empty(order)
    for p in range(xs.shape[0]):
        span = find_span(t, order, xs[p])
        basis_row(t, order, span, xs[p], row)
        for k in range(order):
            col = span - order + 1 + k
            if 0 <= col < m:
                out[p, col] = row[k]
    return out


@njit(cache=True)
def _accumulate_interval(t, order, alpha, lo, hi, gx, gw, acc):
    """Add Gauss-Legendre contributions of \\int_lo^hi prod(xi-alpha) B_k(xi) dxi
    to acc (indexed by full spline index)."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (lo + hi)
    row = np.empty(order)
    for g in range(gx.shape[0]):
        xi = mid + half * gx[g]
        w = half * gw[g]
        pf = 1.0
        for h in range(alpha.shape[0]):
            pf *= xi - alpha[h]
        span = find_span(t, order, xi)
        basis_row(t, order, span, xi, row)
        for k in range(order):
            col = span - order + 1 + k
            if col >= 0:
                acc[col] += w * pf * row[k]


@njit(cache=True)
def lx_design(t, order, breakpoints, alpha, m_scale, xs, gx, gw):
    """Design matrix of the integrated (local extrema) basis.

    Column 0 is the intercept; column k (1..K+order-1) is
    m_scale * int_{-inf}^{x} prod_h(xi - alpha_h) B_k(xi) dxi, where B_k is
    the full-index-k B-spline on the padded sequence t (full index 0 is the
    degenerate left spline and is skipped).  Integration is per knot interval
    with the supplied Gauss-Legendre rule, which is degree-exact.
    """
    K = breakpoints.shape[0]
    nfull = t.shape[0] - order  # == K + order
    ncols = nfull                # intercept + (K+order-1) spline columns
    nint = K - 1
    # cumulative integrals at the breakpoints
    cum = np.zeros((nint + 1, nfull))
    acc = np.zeros(nfull)
    for it in range(nint):
        for c in range(nfull):
            acc[c] = 0.0
        _accumulate_interval(t, order, alpha, breakpoints[it],
                             breakpoints[it + 1], gx, gw, acc)
        for c in range(nfull):
            cum[it + 1, c] = cum[it, c] + acc[c]
    out = np.zeros((xs.shape[0], ncols))
    part = np.zeros(nfull)
    for p in range(xs.shape[0]):
        xv = xs[p]
        ix = np.searchsorted(breakpoints, xv, side="right") - 1
        if ix >= nint:
            ix = nint - 1
        if ix < 0:
            ix = 0
        for c in range(nfull):
            part[c] = 0.0
        if xv > breakpoints[ix]:
            _accumulate_interval(t, order, alpha, breakpoints[ix], xv,
                                 gx, gw, part)
        out[p, 0] = 1.0
        for c in range(1, nfull):
            out[p, c] = m_scale * (cum[ix, c] + part[c])
    return out


@njit(cache=True)
def _accumulate_interval_mono(t, order, nmono, lo, hi, gx, gw, acc, row):
    """Gauss-Legendre contributions of \\int_lo^hi xi^m B_k(xi) dxi for
    m = 0..nmono-1, added into acc[m, full_index]."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (lo + hi)
    for g in range(gx.shape[0]):
        xi = mid + half * gx[g]
        w = half * gw[g]
        span = find_span(t, order, xi)
        basis_row(t, order, span, xi, row)
        pw = 1.0
        for m in range(nmono):
            for k in range(order):
                col = span - order + 1 + k
                if col >= 0:
                    acc[m, col] += w * pw * row[k]
            pw *= xi


@njit(cache=True)
def lx_monomial_designs(t, order, breakpoints, nmono, xs, gx, gw):
    """Stack of design matrices D_m with weight xi^m in place of the
    change-point polynomial: D[m, p, c] = \\int_{-inf}^{x_p} xi^m B_c.
    Column 0 is left zero (the intercept is added when combining)."""
    K = breakpoints.shape[0]
    nfull = t.shape[0] - order
    nint = K - 1
    row = np.empty(order)
    cum = np.zeros((nint + 1, nmono, nfull))
    acc = np.zeros((nmono, nfull))
    for it in range(nint):
        for m in range(nmono):
            for c in range(nfull):
                acc[m, c] = 0.0
        _accumulate_interval_mono(t, order, nmono, breakpoints[it],
                                  breakpoints[it + 1], gx, gw, acc, row)
        for m in range(nmono):
            for c in range(nfull):
                cum[it + 1, m, c] = cum[it, m, c] + acc[m, c]
    out = np.zeros((nmono, xs.shape[0], nfull))
    part = np.zeros((nmono, nfull))
    for p in range(xs.shape[0]):
        xv = xs[p]
        ix = np.searchsorted(breakpoints, xv, side="right") - 1
        if ix >= nint:
            ix = nint - 1
        if ix < 0:
            ix = 0
        for m in range(nmono):
            for c in range(nfull):
                part[m, c] = 0.0
        if xv > breakpoints[ix]:
            _accumulate_interval_mono(t, order, nmono, breakpoints[ix], xv,
                                      gx, gw, part, row)
        for m in range(nmono):
            for c in range(1, nfull):
                out[m, p, c] = cum[ix, m, c] + part[m, c]
    return out


@njit(cache=True)
def alpha_poly_coeffs(alpha, coeffs):
    """Coefficients s_m with prod_h(x - alpha_h) = sum_m s_m x^m, written
    into coeffs (length H+1)."""
    H = alpha.shape[0]
    for m in range(H + 1):
        coeffs[m] = 0.0
    coeffs[0] = 1.0
    deg = 0
    for h in range(H):
        a = alpha[h]
        for m in range(deg, -1, -1):
            coeffs[m + 1] += coeffs[m]
            coeffs[m] *= -a
        deg += 1


@njit(cache=True)
def combine_monomial_design(mono, coeffs, m_scale, out):
    """out = intercept column + m_scale * sum_m coeffs[m] * mono[m]."""
    nmono = mono.shape[0]
    n = mono.shape[1]
    p = mono.shape[2]
    for i in range(n):
        out[i, 0] = 1.0
        for c in range(1, p):
            v = 0.0
            for m in range(nmono):
                v += coeffs[m] * mono[m, i, c]
            out[i, c] = m_scale * v
    return out


@njit(cache=True)
def design_from_mono(mono, alpha, m_scale):
    """Design matrix for the given change points, assembled from the
    monomial-weighted stack."""
    coeffs = np.empty(alpha.shape[0] + 1)
    alpha_poly_coeffs(alpha, coeffs)
    out = np.empty((mono.shape[1], mono.shape[2]))
    return combine_monomial_design(mono, coeffs, m_scale, out)


@njit(cache=True)
def poly_factor(alpha, xs):
    """prod_h (x - alpha_h) evaluated at each x."""
    out = np.ones(xs.shape[0])
    for p in range(xs.shape[0]):
        for h in range(alpha.shape[0]):
            out[p] *= xs[p] - alpha[h]
    return out


@njit(cache=True)
def norm_cdf(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


@njit(cache=True)
def norm_ppf(p):
    """Wichura's AS241 (PPND16): double-precision inverse normal CDF."""
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4)
                    * r + 6.7265770927008700853e4) * r
                   + 4.5921953931549871457e4) * r
                  + 1.3731693765509461125e4) * r
                 + 1.9715909503065514427e3) * r
                + 1.3314166789178437745e2) * r
               + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4)
                    * r + 3.9307895800092710610e4) * r
                   + 2.1213794301586595867e4) * r
                  + 5.3941960214247511077e3) * r
                 + 6.8718700749205790830e2) * r
                + 4.2313330701600911252e1) * r + 1.0)
        return q * num / den
    if q < 0.0:
        r = p
    else:
        r = 1.0 - p
    if r <= 0.0:
        return math.inf if q > 0 else -math.inf
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r = r - 1.6
        num = (((((((7.74545014278341407640e-4 * r
                     + 2.27238449892691845833e-2) * r
                    + 2.41780725177450611770e-1) * r
                   + 1.27045825245236838258e0) * r
                  + 3.64784832476320460504e0) * r
                 + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r
               + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r
                     + 5.47593808499534494600e-4) * r
                    + 1.51986665636164571966e-2) * r
                   + 1.48103976427480074590e-1) * r
                  + 6.89767334985100004550e-1) * r
                 + 1.67638483018380384940e0) * r
                + 2.05319162663775882187e0) * r + 1.0)
    else:
        r = r - 5.0
        num = (((((((2.01033439929228813265e-7 * r
                     + 2.71155556874348757815e-5) * r
                    + 1.24266094738807843860e-3) * r
                   + 2.65321895265761230930e-2) * r
                  + 2.96560571828504891230e-1) * r
                 + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r
               + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r
                     + 1.42151175831644588870e-7) * r
                    + 1.84631831751005468180e-5) * r
                   + 7.86869131145613259100e-4) * r
                  + 1.48753612908506148525e-2) * r
                 + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r + 1.0)
    val = num / den
    return -val if q < 0.0 else val


@njit(cache=True)
def qmc_orthant_means(L, a, nper, generators, shifts):
    """Per-shift means of the Genz separation-of-variables integrand for
    P(X >= a), X ~ N(0, L L^T), using a shifted rank-1 lattice rule.

    generators: (d-1,) irrational generators; shifts: (n_shifts, d-1).
    """
    d = a.shape[0]
    dim = d - 1
    nshift = shifts.shape[0]
    means = np.empty(nshift)
    y = np.empty(dim) if dim > 0 else np.empty(1)
    for si in range(nshift):
        acc = 0.0
        for k in range(nper):
            d0 = norm_cdf(a[0] / L[0, 0])
            prob = 1.0 - d0
            prev = d0
            for i in range(1, d):
                w = (generators[i - 1] * (k + 1) + shifts[si, i - 1]) % 1.0
                u = prev + w * (1.0 - prev)
                if u > 1.0 - 1e-16:
                    u = 1.0 - 1e-16
                if u < 1e-300:
                    u = 1e-300
                y[i - 1] = norm_ppf(u)
                num = a[i]
                for jj in range(i):
                    num -= L[i, jj] * y[jj]
                di = norm_cdf(num / L[i, i])
                prob *= 1.0 - di
                prev = di
            acc += prob
        means[si] = acc / nper
    return means
