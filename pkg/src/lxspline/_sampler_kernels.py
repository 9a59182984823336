"""Compiled inner loops for the posterior sampler: spike/slab Gibbs sweep,
change-point Metropolis sweep, and the pattern marginals of the knot move.

All randomness flows through the numpy Generator passed in, so draws are
bit-identical to an equivalent pure-numpy implementation.
"""

import math

import numpy as np
from numba import njit

from ._kernels import (
    alpha_poly_coeffs,
    norm_cdf,
    norm_ppf,
    qmc_orthant_means,
)

LOG_2PI = math.log(2.0 * math.pi)

_GL20_X = np.array([
    0.07652652113349733, 0.2277858511416451, 0.3737060887154195,
    0.5108670019508271, 0.6360536807265150, 0.7463319064601508,
    0.8391169718222188, 0.9122344282513259, 0.9639719272779138,
    0.9931285991850949,
])
_GL20_W = np.array([
    0.1527533871307258, 0.1491729864726037, 0.1420961093183820,
    0.1316886384491766, 0.1181945319615184, 0.1019301198172404,
    0.08327674157670475, 0.06267204833410907, 0.04060142980038694,
    0.01761400713915212,
])


@njit(cache=True)
def log_ndtr_nb(z):
    if z > -37.0:
        return math.log(0.5 * math.erfc(-z / math.sqrt(2.0)))
    # asymptotic tail expansion
    zi = 1.0 / z
    return (
        -0.5 * z * z
        - 0.5 * LOG_2PI
        - math.log(-z)
        + math.log1p(-zi * zi + 3.0 * zi**4)
    )


@njit(cache=True)
def sample_pos_normal_nb(rng, mean, sd):
    """N(mean, sd^2) truncated to (0, inf): inverse CDF on the upper tail
    with an exponential-tilt fallback deep in the tail."""
    a = -mean / sd
    sf = norm_cdf(-a)
    u = rng.random()
    if sf > 1e-280:
        z = -norm_ppf(sf * (1.0 - u))
    else:
        z = a - math.log1p(-u) / a
    return mean + sd * z


@njit(cache=True)
def spike_slab_log_odds(xr, bb, pi, lam, s2t):
    """Log odds of the slab against the spike for one coefficient whose
    column has squared norm bb and residual cross product xr, with noise
    variance s2t.  The exponential slab completes the square to a positive-
    truncated normal with mean m - lam*s2 and variance s2 = s2t/bb."""
    m = xr / bb
    s2 = s2t / bb
    s = math.sqrt(s2)
    mt = m - lam * s2
    z = mt / s
    return (
        math.log1p(-pi) - math.log(pi) + math.log(lam)
        + 0.5 * math.log(2.0 * math.pi * s2)
        + log_ndtr_nb(z) + 0.5 * z * z
    )


@njit(cache=True)
def gibbs_sweep_nb(rng, X, col_sq, y, fit, beta, beta0, pi, lam, s2t, c):
    """One sweep over the spike/slab coefficients and the intercept.
    Mutates fit and beta; returns (new_beta0, rss)."""
    n = y.shape[0]
    for k in range(beta.shape[0]):
        bb = col_sq[k + 1]
        old = beta[k]
        if bb == 0.0:
            beta[k] = 0.0
            continue
        xr = 0.0
        for i in range(n):
            xr += X[i, k + 1] * (y[i] - fit[i] + old * X[i, k + 1])
        s2 = s2t / bb
        s = math.sqrt(s2)
        mt = xr / bb - lam * s2
        log_odds = spike_slab_log_odds(xr, bb, pi, lam, s2t)
        if log_odds > 35.0:
            p_nz = 1.0
        elif log_odds < -35.0:
            p_nz = 0.0
        else:
            p_nz = 1.0 / (1.0 + math.exp(-log_odds))
        if rng.random() < p_nz:
            new = sample_pos_normal_nb(rng, mt, s)
            if not math.isfinite(new):
                new = 0.0
        else:
            new = 0.0
        if new != old:
            delta = new - old
            for i in range(n):
                fit[i] += delta * X[i, k + 1]
            beta[k] = new
    sum_r0 = 0.0
    for i in range(n):
        sum_r0 += y[i] - fit[i] + beta0
    prec = n / s2t + 1.0 / c
    mean = (sum_r0 / s2t) / prec
    new0 = rng.normal(mean, math.sqrt(1.0 / prec))
    delta0 = new0 - beta0
    rss = 0.0
    for i in range(n):
        fit[i] += delta0
        d = y[i] - fit[i]
        rss += d * d
    return new0, rss


@njit(cache=True)
def alpha_sweep_nb(rng, mono, alpha, m_scale, X, col_sq, fit, beta0, beta,
                   y, rss, sigma2, kappa, a_lo, b_hi, prior_mean, min_sep,
                   step):
    """Random-walk Metropolis over the change points.  The candidate design
    is assembled from the cached monomial-weighted integrals `mono` via the
    coefficients of prod_h (x - alpha_h).  Mutates alpha, X, col_sq, fit on
    acceptance; returns (n_accept, rss)."""
    n = y.shape[0]
    p = X.shape[1]
    hdim = alpha.shape[0]
    nmono = hdim + 1
    coeffs = np.empty(nmono)
    fitc = np.empty(n)
    n_acc = 0
    for h in range(hdim):
        prop = alpha[h] + rng.normal(0.0, 1.0) * step
        if prop < a_lo or prop > b_hi:
            continue
        ok = True
        for h2 in range(hdim):
            if h2 != h and abs(prop - alpha[h2]) < min_sep:
                ok = False
        if not ok:
            continue
        cand = alpha.copy()
        cand[h] = prop
        alpha_poly_coeffs(cand, coeffs)
        rss_c = 0.0
        for i in range(n):
            fi = beta0
            for k in range(beta.shape[0]):
                if beta[k] != 0.0:
                    v = 0.0
                    for m in range(nmono):
                        v += coeffs[m] * mono[m, i, k + 1]
                    fi += beta[k] * m_scale * v
            fitc[i] = fi
            d = y[i] - fi
            rss_c += d * d
        log_acc = (
            -0.5 * ((prop - prior_mean) ** 2 - (alpha[h] - prior_mean) ** 2)
            - 0.5 * kappa * (rss_c - rss) / sigma2
        )
        if math.log(rng.random()) < log_acc:
            alpha[h] = prop
            for i in range(n):
                fit[i] = fitc[i]
                X[i, 0] = 1.0
            col_sq[0] = float(n)
            for k in range(1, p):
                sq = 0.0
                for i in range(n):
                    v = 0.0
                    for m in range(nmono):
                        v += coeffs[m] * mono[m, i, k]
                    xv = m_scale * v
                    X[i, k] = xv
                    sq += xv * xv
                col_sq[k] = sq
            rss = rss_c
            n_acc += 1
    return n_acc, rss


@njit(cache=True)
def bvn_upper(dh, dk, r):
    """P(X > dh, Y > dk) for a standard bivariate normal with correlation r
    (Drezner-Wesolowsky / Genz algorithm, double precision)."""
    x20 = _GL20_X
    w20 = _GL20_W
    h = dh
    k = dk
    hk = h * k
    bvn = 0.0
    if abs(r) < 0.925:
        hs = (h * h + k * k) / 2.0
        asr = math.asin(r)
        for i in range(20):
            if i < 10:
                sn = math.sin(asr * (1.0 - x20[i]) / 2.0)
                w = w20[i]
            else:
                sn = math.sin(asr * (1.0 + x20[i - 10]) / 2.0)
                w = w20[i - 10]
            bvn += w * math.exp((sn * hk - hs) / (1.0 - sn * sn))
        bvn = bvn * asr / (4.0 * math.pi) + norm_cdf(-h) * norm_cdf(-k)
    else:
        if r < 0.0:
            k = -k
            hk = -hk
        if abs(r) < 1.0:
            ass = (1.0 - r) * (1.0 + r)
            a = math.sqrt(ass)
            bs = (h - k) * (h - k)
            cc = (4.0 - hk) / 8.0
            dd = (12.0 - hk) / 16.0
            asr0 = -(bs / ass + hk) / 2.0
            if asr0 > -100.0:
                bvn = (
                    a * math.exp(asr0)
                    * (1.0 - cc * (bs - ass) * (1.0 - dd * bs / 5.0) / 3.0
                       + cc * dd * ass * ass / 5.0)
                )
            if -hk < 100.0:
                b = math.sqrt(bs)
                bvn -= (
                    math.exp(-hk / 2.0) * math.sqrt(2.0 * math.pi)
                    * norm_cdf(-b / a) * b
                    * (1.0 - cc * bs * (1.0 - dd * bs / 5.0) / 3.0)
                )
            a = a / 2.0
            for i in range(20):
                if i < 10:
                    xi = a * (1.0 - x20[i])
                    w = w20[i] * a
                else:
                    xi = a * (1.0 + x20[i - 10])
                    w = w20[i - 10] * a
                xs = xi * xi
                rs = math.sqrt(1.0 - xs)
                asr0 = -(bs / xs + hk) / 2.0
                if asr0 > -100.0:
                    bvn += (
                        w * math.exp(asr0)
                        * (math.exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs
                           - (1.0 + cc * xs * (1.0 + dd * xs)))
                    )
            bvn = -bvn / (2.0 * math.pi)
        if r > 0.0:
            hmax = h if h > k else k
            bvn += norm_cdf(-hmax)
        else:
            bvn = -bvn
            if k > h:
                bvn += norm_cdf(k) - norm_cdf(h)
    if bvn < 0.0:
        bvn = 0.0
    if bvn > 1.0:
        bvn = 1.0
    return bvn


@njit(cache=True)
def _phi2(x, y, rho):
    """Standard bivariate normal density."""
    om = 1.0 - rho * rho
    return math.exp(-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * om)) / (
        2.0 * math.pi * math.sqrt(om)
    )


@njit(cache=True)
def _cond_surv(hi, hj, hk, cij, cik, cjk):
    """P(X_k > hk | X_i = hi, X_j = hj) under unit-variance normals with
    the given correlations."""
    om = 1.0 - cij * cij
    if om < 1e-12:
        om = 1e-12
    mu = ((cik - cij * cjk) * hi + (cjk - cij * cik) * hj) / om
    var = 1.0 - (cik * cik + cjk * cjk - 2.0 * cij * cik * cjk) / om
    if var < 1e-14:
        var = 1e-14
    return norm_cdf((mu - hk) / math.sqrt(var))


@njit(cache=True)
def tvn_upper(h1, h2, h3, r12, r13, r23):
    """P(X1 > h1, X2 > h2, X3 > h3) for a standard trivariate normal.

    Plackett path integral: start from the block matrix with r12 = r13 = 0
    (where the probability factors into a univariate times a bivariate term)
    and move those two correlations linearly to their targets, integrating
    the correlation derivative with 20-point Gauss-Legendre."""
    est = norm_cdf(-h1) * bvn_upper(h2, h3, r23)
    if r12 == 0.0 and r13 == 0.0:
        return est
    total = 0.0
    for g in range(10):
        for sgn in range(2):
            if sgn == 0:
                t = 0.5 * (1.0 - _GL20_X[g])
            else:
                t = 0.5 * (1.0 + _GL20_X[g])
            w = 0.5 * _GL20_W[g]
            c12 = t * r12
            c13 = t * r13
            v = 0.0
            if r12 != 0.0:
                v += r12 * _phi2(h1, h2, c12) * _cond_surv(
                    h1, h2, h3, c12, c13, r23)
            if r13 != 0.0:
                v += r13 * _phi2(h1, h3, c13) * _cond_surv(
                    h1, h3, h2, c13, c12, r23)
            total += w * v
    est += total
    if est < 0.0:
        est = 0.0
    if est > 1.0:
        est = 1.0
    return est


@njit(cache=True)
def reordered_cholesky_nb(cov, a, L, aout):
    """Genz variable-reordering Cholesky for {x >= a}; fills L and the
    permuted aout.  Returns False when the matrix is not PSD."""
    d = a.shape[0]
    sig = cov.copy()
    ap = a.copy()
    y = np.zeros(d)
    for i in range(d):
        for jj in range(d):
            L[i, jj] = 0.0
    for i in range(d):
        best = i
        best_p = np.inf
        for l in range(i, d):
            s2 = sig[l, l]
            for jj in range(i):
                s2 -= L[l, jj] * L[l, jj]
            if s2 <= 1e-14:
                continue
            al = ap[l]
            for jj in range(i):
                al -= L[l, jj] * y[jj]
            al /= math.sqrt(s2)
            pl = 1.0 - norm_cdf(al)
            if pl < best_p:
                best = l
                best_p = pl
        if best != i:
            for jj in range(d):
                tmp = sig[i, jj]
                sig[i, jj] = sig[best, jj]
                sig[best, jj] = tmp
            for jj in range(d):
                tmp = sig[jj, i]
                sig[jj, i] = sig[jj, best]
                sig[jj, best] = tmp
            for jj in range(i):
                tmp = L[i, jj]
                L[i, jj] = L[best, jj]
                L[best, jj] = tmp
            tmp = ap[i]
            ap[i] = ap[best]
            ap[best] = tmp
        s2 = sig[i, i]
        for jj in range(i):
            s2 -= L[i, jj] * L[i, jj]
        if s2 <= 0.0:
            if s2 < -1e-8 * max(1.0, sig[i, i]):
                return False
            s2 = 1e-14
        L[i, i] = math.sqrt(s2)
        for l in range(i + 1, d):
            v = sig[l, i]
            for jj in range(i):
                v -= L[l, jj] * L[i, jj]
            L[l, i] = v / L[i, i]
        ai = ap[i]
        for jj in range(i):
            ai -= L[i, jj] * y[jj]
        ai /= L[i, i]
        if ai > 37.0:
            ai = 37.0
        if ai < -37.0:
            ai = -37.0
        tail = 1.0 - norm_cdf(ai)
        dens = math.exp(-0.5 * ai * ai) / math.sqrt(2.0 * math.pi)
        y[i] = dens / max(tail, 1e-300)
    for i in range(d):
        aout[i] = ap[i]
    return True


@njit(cache=True)
def orthant_nb(rng, mean, cov, gens, nper, nshift):
    """Positive-orthant probability P(X >= 0); closed forms for d <= 2,
    lattice QMC otherwise.  Returns -1.0 on a non-PSD covariance."""
    d = mean.shape[0]
    if d == 1:
        sd = math.sqrt(cov[0, 0])
        return norm_cdf(mean[0] / sd)
    if d == 2:
        s0 = math.sqrt(cov[0, 0])
        s1 = math.sqrt(cov[1, 1])
        rho = cov[0, 1] / (s0 * s1)
        if rho > 1.0:
            rho = 1.0
        if rho < -1.0:
            rho = -1.0
        return bvn_upper(-mean[0] / s0, -mean[1] / s1, rho)
    if d == 3:
        s0 = math.sqrt(cov[0, 0])
        s1 = math.sqrt(cov[1, 1])
        s2 = math.sqrt(cov[2, 2])
        r12 = cov[0, 1] / (s0 * s1)
        r13 = cov[0, 2] / (s0 * s2)
        r23 = cov[1, 2] / (s1 * s2)
        rmax = max(abs(r12), abs(r13), abs(r23))
        det_r = (1.0 + 2.0 * r12 * r13 * r23
                 - r12 * r12 - r13 * r13 - r23 * r23)
        if rmax <= 0.95 and det_r > 1e-6:
            return tvn_upper(-mean[0] / s0, -mean[1] / s1, -mean[2] / s2,
                             r12, r13, r23)
    a = -mean
    L = np.empty((d, d))
    ap = np.empty(d)
    if not reordered_cholesky_nb(cov, a, L, ap):
        return -1.0
    shifts = rng.random((nshift, d - 1))
    means = qmc_orthant_means(L, ap, nper, gens[: d - 1], shifts)
    est = 0.0
    for i in range(nshift):
        est += means[i]
    est /= nshift
    if est < 0.0:
        est = 0.0
    if est > 1.0:
        est = 1.0
    return est


@njit(cache=True)
def _chol_small(A, L):
    """Plain Cholesky of a small matrix into L; False when not PD."""
    d = A.shape[0]
    for i in range(d):
        for j in range(d):
            L[i, j] = 0.0
    for i in range(d):
        s = A[i, i]
        for k in range(i):
            s -= L[i, k] * L[i, k]
        if s <= 0.0:
            return False
        L[i, i] = math.sqrt(s)
        for j in range(i + 1, d):
            v = A[j, i]
            for k in range(i):
                v -= L[j, k] * L[i, k]
            L[j, i] = v / L[i, i]
    return True


@njit(cache=True)
def _chol_solve(L, b, x):
    d = L.shape[0]
    for i in range(d):
        v = b[i]
        for k in range(i):
            v -= L[i, k] * x[k]
        x[i] = v / L[i, i]
    for i in range(d - 1, -1, -1):
        v = x[i]
        for k in range(i + 1, d):
            v -= L[k, i] * x[k]
        x[i] = v / L[i, i]


@njit(cache=True)
def rj_block_stats(X, Xnew, lo, hi_old, hi_new, beta, fit, y):
    """Residual against everything but the affected block, its sum of
    squares, and the Gram/cross-product statistics of the old and new
    affected columns."""
    n = X.shape[0]
    d_old = hi_old + 1 - lo
    d_new = hi_new + 1 - lo
    r = np.empty(n)
    rr = 0.0
    for i in range(n):
        v = y[i] - fit[i]
        for k in range(d_old):
            b = beta[lo - 1 + k]
            if b != 0.0:
                v += b * X[i, lo + k]
        r[i] = v
        rr += v * v
    G_old = np.zeros((d_old, d_old))
    xr_old = np.zeros(d_old)
    for i in range(n):
        ri = r[i]
        for a in range(d_old):
            xa = X[i, lo + a]
            xr_old[a] += xa * ri
            for b in range(a, d_old):
                G_old[a, b] += xa * X[i, lo + b]
    for a in range(d_old):
        for b in range(a + 1, d_old):
            G_old[b, a] = G_old[a, b]
    G_new = np.zeros((d_new, d_new))
    xr_new = np.zeros(d_new)
    for i in range(n):
        ri = r[i]
        for a in range(d_new):
            xa = Xnew[i, lo + a]
            xr_new[a] += xa * ri
            for b in range(a, d_new):
                G_new[a, b] += xa * Xnew[i, lo + b]
    for a in range(d_new):
        for b in range(a + 1, d_new):
            G_new[b, a] = G_new[a, b]
    return rr, G_old, xr_old, G_new, xr_new


@njit(cache=True)
def rj_pattern_terms(rng, G, xr, rr, s2t, pi, lam, gens, nper, nshift,
                     live, logterms):
    """Log marginal terms, one per spike/slab pattern over the live columns
    of the affected block.  G is the Gram matrix of the block, xr the
    cross products with the residual, rr the residual sum of squares.
    Patterns are bitmasks over `live`.  Returns the total log marginal, or
    nan when a Gram submatrix fails to factor."""
    nlive = live.shape[0]
    npat = logterms.shape[0]  # == 1 << nlive
    log_pi = math.log(pi)
    log_slab = math.log1p(-pi) + math.log(lam)
    base = -0.5 * rr / s2t
    maxd = nlive if nlive > 1 else 1
    A = np.empty((maxd, maxd))
    Lc = np.empty((maxd, maxd))
    bvec = np.empty(maxd)
    mu = np.empty(maxd)
    cols = np.empty(maxd, dtype=np.int64)
    for mask in range(npat):
        nS = 0
        for i in range(nlive):
            if mask >> i & 1:
                cols[nS] = live[i]
                nS += 1
        term = (nlive - nS) * log_pi + nS * log_slab
        if nS == 1:
            c0 = cols[0]
            bb = G[c0, c0]
            m = xr[c0] / bb
            s2 = s2t / bb
            s = math.sqrt(s2)
            z = (m - lam * s2) / s
            term += 0.5 * math.log(2.0 * math.pi * s2) + log_ndtr_nb(z) + 0.5 * z * z
        elif nS > 1:
            for ii in range(nS):
                ci = cols[ii]
                bvec[ii] = xr[ci] - s2t * lam
                for jj in range(ii, nS):
                    g = G[ci, cols[jj]]
                    A[ii, jj] = g
                    A[jj, ii] = g
            if not _chol_small(A[:nS, :nS], Lc[:nS, :nS]):
                return math.nan
            # a numerically singular block makes the marginal formula
            # meaningless; give the pattern zero weight instead
            dmax = A[0, 0]
            pmin = Lc[0, 0]
            for ii in range(nS):
                if A[ii, ii] > dmax:
                    dmax = A[ii, ii]
                if Lc[ii, ii] < pmin:
                    pmin = Lc[ii, ii]
            if pmin * pmin < 1e-9 * dmax:
                logterms[mask] = -math.inf
                continue
            _chol_solve(Lc[:nS, :nS], bvec[:nS], mu[:nS])
            logdet = 0.0
            for ii in range(nS):
                logdet += 2.0 * math.log(Lc[ii, ii])
            quad = 0.0
            for ii in range(nS):
                quad += bvec[ii] * mu[ii]
            # covariance of the slab block: s2t * A^{-1}
            cov = np.empty((nS, nS))
            e = np.zeros(nS)
            col = np.empty(nS)
            for jj in range(nS):
                e[jj] = 1.0
                _chol_solve(Lc[:nS, :nS], e, col)
                for ii in range(nS):
                    cov[ii, jj] = s2t * col[ii]
                e[jj] = 0.0
            est = orthant_nb(rng, mu[:nS].copy(), cov, gens, nper, nshift)
            if est < 0.0:
                return math.nan
            if est < 1e-250:
                # the quadratic exponent must cancel against an orthant
                # probability too small to estimate; the pattern's true
                # mass concentrates on its boundary and is dominated by
                # the sub-patterns already enumerated, so drop it
                logterms[mask] = -math.inf
                continue
            term += (
                0.5 * nS * math.log(2.0 * math.pi * s2t)
                - 0.5 * logdet
                + 0.5 * quad / s2t
                + math.log(est)
            )
        logterms[mask] = term
    peak = logterms[0]
    for mask in range(1, npat):
        if logterms[mask] > peak:
            peak = logterms[mask]
    acc = 0.0
    for mask in range(npat):
        acc += math.exp(logterms[mask] - peak)
    return base + peak + math.log(acc)


@njit(cache=True)
def rj_sample_affected(rng, G, xr, s2t, lam, live, logterms):
    """Pick a spike/slab pattern with probability proportional to its term,
    then fill the slab block from the positive-orthant normal by sequential
    univariate conditionals.  Returns the affected coefficient vector."""
    d = G.shape[0]
    nlive = live.shape[0]
    npat = logterms.shape[0]
    peak = logterms[0]
    for mask in range(1, npat):
        if logterms[mask] > peak:
            peak = logterms[mask]
    total = 0.0
    for mask in range(npat):
        total += math.exp(logterms[mask] - peak)
    u = rng.random() * total
    chosen = npat - 1
    acc = 0.0
    for mask in range(npat):
        acc += math.exp(logterms[mask] - peak)
        if u <= acc:
            chosen = mask
            break
    beta = np.zeros(d)
    nS = 0
    cols = np.empty(nlive if nlive > 0 else 1, dtype=np.int64)
    for i in range(nlive):
        if chosen >> i & 1:
            cols[nS] = live[i]
            nS += 1
    if nS == 0:
        return beta
    A = np.empty((nS, nS))
    Lc = np.empty((nS, nS))
    bvec = np.empty(nS)
    mu = np.empty(nS)
    for ii in range(nS):
        ci = cols[ii]
        bvec[ii] = xr[ci] - s2t * lam
        for jj in range(ii, nS):
            g = G[ci, cols[jj]]
            A[ii, jj] = g
            A[jj, ii] = g
    if not _chol_small(A, Lc):
        return beta
    _chol_solve(Lc, bvec, mu)
    cov = np.empty((nS, nS))
    e = np.zeros(nS)
    col = np.empty(nS)
    for jj in range(nS):
        e[jj] = 1.0
        _chol_solve(Lc, e, col)
        for ii in range(nS):
            cov[ii, jj] = s2t * col[ii]
        e[jj] = 0.0
    # sequential conditionals via the Cholesky factor of the covariance:
    # x_i | x_<i is normal with mean mu_i + sum_k C[i,k] z_k and sd C[i,i]
    C = np.empty((nS, nS))
    if not _chol_small(cov, C):
        jitter = 1e-12 * cov[0, 0]
        for ii in range(nS):
            if cov[ii, ii] > jitter * 1e12:
                jitter = 1e-12 * cov[ii, ii]
            cov[ii, ii] += jitter
        if not _chol_small(cov, C):
            for ii in range(nS):
                for jj in range(nS):
                    C[ii, jj] = 0.0
                C[ii, ii] = math.sqrt(max(cov[ii, ii], 1e-28))
    vals = np.empty(nS)
    z = np.empty(nS)
    for i in range(nS):
        cm = mu[i]
        for k in range(i):
            cm += C[i, k] * z[k]
        sd = max(C[i, i], 1e-14)
        vals[i] = sample_pos_normal_nb(rng, cm, sd)
        z[i] = (vals[i] - cm) / sd
    for i in range(nS):
        beta[cols[i]] = vals[i]
    return beta
