"""Acceptance suite: ten end-to-end criteria, each printing one PASS/FAIL
line and enforcing its wall-clock budget.

The heavy posterior-quality criteria (5, 7, 8, 9) run the full sampler and
dominate the suite's runtime.
"""

import json
import math
import time

import numpy as np
import pytest
from click.testing import CliRunner
from scipy import integrate, stats
from scipy.optimize import nnls
from scipy.special import gammainc, ndtr

from lxspline import model as model_mod
from lxspline import tree as tree_mod
from lxspline.basis import (
    KnotVector,
    LxBasis,
    PiecewisePoly,
    bspline_design,
    bspline_eval,
    lx_basis_eval,
    lx_derivative_eval,
)
from lxspline.cli import main as cli_main
from lxspline.model import Dataset, Hyperparameters
from lxspline.orthant import OrthantProblem, mc_oracle, orthant_prob
from lxspline.sampler import (
    ChainConfig,
    gibbs_beta,
    run_tempered,
    spike_slab_weight,
    update_hypers,
)
from lxspline.simulate import named_scenario, run_replicates


def _report(num: int, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"acceptance criterion {num}: {detail}"


def _budget(num: int, t0: float, limit: float) -> float:
    elapsed = time.perf_counter() - t0
    assert elapsed <= limit, (
        f"acceptance criterion {num} exceeded its budget: "
        f"{elapsed:.1f}s > {limit}s"
    )
    return elapsed


# -- 1: prior curves change direction only at interior change points --------


def test_acceptance_01_prior_draws_respect_shape_constraint():
    t0 = time.perf_counter()
    grid = np.linspace(-0.5 + 1e-9, 0.5 - 1e-9, 10_000)
    dx = grid[1] - grid[0]
    violations = 0
    rng = np.random.default_rng(20_260_801)
    for h in (1, 2, 3):
        hp = Hyperparameters(h=h)
        for _ in range(1000):
            state = model_mod.sample_prior_state(hp, rng)
            basis = model_mod.basis_for(state, hp)
            deriv = lx_derivative_eval(
                basis, np.concatenate([[state.beta0], state.beta]), grid
            )
            interior = state.alpha[(state.alpha > -0.5) & (state.alpha < 0.5)]
            keep = np.abs(deriv) > 1e-12
            idx = np.flatnonzero(keep)
            signs = np.sign(deriv[idx])
            for a, b in zip(idx[:-1][signs[:-1] != signs[1:]],
                            idx[1:][signs[:-1] != signs[1:]]):
                lo, hi = grid[a] - dx, grid[b] + dx
                if not np.any((interior >= lo) & (interior <= hi)):
                    violations += 1
    elapsed = _budget(1, t0, 60)
    _report(1, violations == 0,
            f"{violations} sign-change violations over 3000 draws, "
            f"{elapsed:.1f}s")


# -- 2: constrained least squares recovers the one-extremum benchmark -------


def _nnls_sup_error(spacing_pow: int) -> float:
    knots = np.linspace(0.0, 1.0, 2**spacing_pow + 1)
    basis = LxBasis(KnotVector(knots, order=2), np.array([0.5]), 1.0)
    xs = np.linspace(0.0, 1.0, 801)
    target = 10 * (xs - 0.5) ** 2
    X = basis.design_matrix(xs)
    # free-sign intercept via a +/- column pair; curve coefficients stay >= 0
    design = np.column_stack([X[:, 0], -X[:, 0], X[:, 1:]])
    coef, _ = nnls(design, target, maxiter=10 * design.shape[1])
    return float(np.max(np.abs(design @ coef - target)))


def test_acceptance_02_nnls_projection_error():
    t0 = time.perf_counter()
    errors = [_nnls_sup_error(p) for p in (3, 4, 5, 6)]
    final_ok = errors[-1] < 0.05
    # the target lies in the spline space at every spacing, so the errors sit
    # at solver round-off; non-increase is asserted to round-off slack
    mono_ok = all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))
    elapsed = _budget(2, t0, 60)
    _report(2, final_ok and mono_ok,
            "sup errors " + ", ".join(f"{e:.2e}" for e in errors)
            + f" at spacings 1/8..1/64, {elapsed:.1f}s")


# -- 3: basis identities and an independent numerical oracle ---------------


def _trapezoid_antiderivative(basis, k, x, points_per_interval=20_000):
    """Dense-trapezoid value of Bstar_k(x) on knot-aligned grids, sampling
    strictly inside each interval (order-1 splines jump at the knots)."""
    kv = basis.knots
    knots = kv.knots
    total = 0.0
    eps = 1e-13
    for i in range(knots.size - 1):
        a, b = knots[i], min(knots[i + 1], x)
        if b <= a:
            break
        grid = np.linspace(a, b, points_per_interval)
        inner = np.clip(grid, a + eps, b - eps)
        full = bspline_design(kv, inner)
        vals = full[:, k - 1] * np.prod(inner[:, None] - basis.alpha, axis=1)
        total += np.trapezoid(vals, grid)
    return basis.m_scale * total


def test_acceptance_03_basis_identities_and_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst_pu = 0.0
    worst_int = 0.0
    for _ in range(100):
        order = int(rng.integers(1, 5))
        n_interior = int(rng.integers(0, 5))
        while True:
            knots = np.sort(
                np.concatenate([[0.0, 1.0], rng.random(n_interior)])
            )
            if n_interior == 0 or np.min(np.diff(knots)) >= 0.05:
                break
        kv = KnotVector(knots, order)
        xs = rng.random(200)
        pu = np.max(np.abs(bspline_design(kv, xs).sum(axis=1) - 1.0))
        worst_pu = max(worst_pu, float(pu))
        t = kv.padded
        for k in range(1, kv.n_basis + 1):
            poly = PiecewisePoly.from_callable(
                lambda x, k=k: bspline_eval(kv, k, x), kv.knots, order - 1
            )
            got = poly.integrate(kv.lo, kv.hi)
            worst_int = max(
                worst_int, abs(got - (t[k + order] - t[k]) / order)
            )
    worst_oracle = 0.0
    for _ in range(100):
        order = int(rng.integers(1, 5))
        n_interior = int(rng.integers(0, 4))
        while True:
            knots = np.sort(
                np.concatenate([[0.0, 1.0], rng.random(n_interior)])
            )
            if n_interior == 0 or np.min(np.diff(knots)) >= 0.1:
                break
        n_alpha = int(rng.integers(0, 3))
        while True:
            alpha = np.sort(rng.uniform(-0.2, 1.2, size=n_alpha))
            if n_alpha <= 1 or np.min(np.diff(alpha)) >= 1e-3:
                break
        m_scale = float(rng.uniform(0.5, 10.0) * rng.choice([-1.0, 1.0]))
        basis = LxBasis(KnotVector(knots, order), alpha, m_scale)
        k = int(rng.integers(1, basis.knots.n_basis + 1))
        for x in rng.random(2):
            got = lx_basis_eval(basis, k, float(x))
            want = _trapezoid_antiderivative(basis, k, float(x))
            worst_oracle = max(worst_oracle, abs(got - want))
    elapsed = _budget(3, t0, 60)
    ok = worst_pu < 1e-10 and worst_int < 1e-10 and worst_oracle < 1e-7
    _report(3, ok,
            f"partition-of-unity {worst_pu:.1e}, integral {worst_int:.1e}, "
            f"trapezoid oracle {worst_oracle:.1e}, {elapsed:.1f}s")


# -- 4: orthant probabilities vs closed forms and plain Monte Carlo ---------


def test_acceptance_04_orthant_probabilities():
    t0 = time.perf_counter()
    worst_closed = 0.0
    rng = np.random.default_rng(44)
    for rho in np.arange(-0.9, 0.91, 0.1):
        cov = np.array([[1.0, rho], [rho, 1.0]])
        est, _ = orthant_prob(OrthantProblem(np.zeros(2), cov, np.zeros(2)),
                              rng=rng)
        want = 0.25 + math.asin(rho) / (2 * math.pi)
        worst_closed = max(worst_closed, abs(est - want))
    mismatches = 0
    for _ in range(50):
        d = int(rng.integers(1, 7))
        A = rng.normal(size=(d, d))
        cov = A @ A.T + 0.2 * np.eye(d)
        mean = rng.normal(size=d)
        lower = mean + rng.uniform(-1, 1, size=d) * np.sqrt(np.diag(cov))
        prob = OrthantProblem(mean, cov, lower)
        est, se = orthant_prob(prob, rng=rng)
        mc, mc_se = mc_oracle(prob, 1_000_000, rng)
        if abs(est - mc) > 3 * math.sqrt(se * se + mc_se * mc_se):
            mismatches += 1
    elapsed = _budget(4, t0, 300)
    ok = worst_closed < 1e-3 and mismatches == 0
    _report(4, ok,
            f"closed-form error {worst_closed:.2e}, {mismatches}/50 outside "
            f"3 combined SE, {elapsed:.1f}s")


# -- 5: flat-likelihood run recovers the prior ------------------------------


def test_acceptance_05_prior_recovery():
    t0 = time.perf_counter()
    hp = Hyperparameters()
    # a flat likelihood makes every rung identical, so one suffices
    cfg = ChainConfig(n_iters=100_000, burn_in=5000, temperatures=(1.0,),
                      seed=57, adapt_alpha_step=False, alpha_step=0.8)
    draws, _ = run_tempered(None, hp, cfg)
    sizes = np.array([len(d.state["tree"]) for d in draws])
    pis = np.array([d.state["pi"] for d in draws])
    lams = np.array([d.state["lambda"] for d in draws])
    rng = np.random.default_rng(56)
    ref = np.array([len(tree_mod.sample_tree(rng)) for _ in range(100_000)])
    tv = 0.0
    for size in range(1, int(max(sizes.max(), ref.max())) + 1):
        tv += 0.5 * abs(float(np.mean(sizes == size))
                        - float(np.mean(ref == size)))
    ks_pi = stats.kstest(pis, stats.beta(hp.nu, hp.omega).cdf).statistic
    floor_mass = gammainc(hp.delta, hp.kappa * hp.lambda_floor)
    ks_lam = stats.kstest(
        lams,
        lambda x: (gammainc(hp.delta, hp.kappa * x) - floor_mass)
        / (1 - floor_mass),
    ).statistic
    elapsed = _budget(5, t0, 600)
    ok = tv < 0.05 and ks_pi < 0.02 and ks_lam < 0.02
    _report(5, ok,
            f"tree-size TV {tv:.3f}, KS pi {ks_pi:.3f}, KS lambda "
            f"{ks_lam:.3f}, {elapsed:.1f}s")


# -- 6: coefficient mixture weight and a marginal-vs-conditional check ------


def test_acceptance_06_mixture_weight_and_geweke():
    t0 = time.perf_counter()
    rng = np.random.default_rng(66)
    worst_rel = 0.0
    for _ in range(50):
        bb = float(rng.uniform(0.5, 20))
        xr = float(rng.normal(0, 5))
        pi = float(rng.uniform(0.05, 0.95))
        lam = float(rng.uniform(0.1, 3))
        s2 = float(rng.uniform(0.3, 2))
        got = spike_slab_weight(xr, bb, pi, lam, s2)
        slab, _ = integrate.quad(
            lambda b: lam * math.exp(-lam * b)
            * math.exp(-(b * b * bb - 2 * b * xr) / (2 * s2)),
            0, np.inf, epsabs=1e-15, epsrel=1e-13, limit=200,
        )
        want = (1 - pi) * slab / (pi + (1 - pi) * slab)
        worst_rel = max(worst_rel, abs(got - want) / want)

    # marginal-vs-successive-conditional comparison with the tree and change
    # points held fixed.  The coefficient sweep pins columns with zero design
    # norm (e.g. the identically-zero trailing basis function) to the spike,
    # so its invariant law is the prior conditioned on those coefficients
    # being zero; the marginal side samples that same conditioned prior
    # (which tilts pi to Beta(nu + #pinned, omega)).  The coefficient-rate
    # prior is given shape 2 here: the default shape-0.2 prior is so heavy
    # tailed that the joint chain switches scale regimes too rarely for a
    # finite-length two-sample comparison, while the code paths under test
    # are identical.
    hp = Hyperparameters(delta=2.0, kappa=2.0)
    xs = np.linspace(0, 1, 20)
    base = model_mod.sample_prior_state(hp, np.random.default_rng(67))
    n_coef = base.beta.size
    xw = Dataset(xs, np.zeros_like(xs), (0.0, 1.0)).xs_working
    X = model_mod.basis_for(base, hp).design_matrix(xw)
    col_norm = np.einsum("ij,ij->j", X, X)[1:]
    free = col_norm > 1e-12
    n_pinned = int(np.sum(~free))

    def stats_of(s):
        return np.array([
            math.tanh(s.beta0 / 10.0),
            float(np.mean(s.beta[free] == 0.0)),
            math.tanh(float(s.beta.sum())),
            s.pi,
            s.pi * s.pi,
            math.exp(-s.lam),
            1.0 / (1.0 + s.sigma2),
            math.exp(-s.sigma2),
        ])

    def prior_coords(rng):
        pi = float(rng.beta(hp.nu + n_pinned, hp.omega))
        lam = model_mod.sample_trunc_gamma(hp.delta, hp.kappa,
                                           hp.lambda_floor, rng)
        beta = np.where(rng.random(n_coef) < pi, 0.0,
                        rng.exponential(1.0 / lam, size=n_coef))
        beta[~free] = 0.0
        beta0 = float(rng.normal(0, math.sqrt(hp.c)))
        sigma2 = float(1.0 / rng.gamma(hp.sigma2_shape, 1.0 / hp.sigma2_rate))
        return model_mod.ModelState(base.tree, beta0, beta, base.alpha,
                                    min(max(pi, 1e-12), 1 - 1e-12), lam,
                                    sigma2)

    n_iter = 20_000
    rng_a = np.random.default_rng(68)
    marg = np.array([stats_of(prior_coords(rng_a)) for _ in range(n_iter)])
    rng_b = np.random.default_rng(69)
    s = prior_coords(rng_b)
    cond = np.empty((n_iter, marg.shape[1]))
    for i in range(n_iter):
        f = model_mod.fitted_values(s, hp, xw)
        y = f + math.sqrt(s.sigma2) * rng_b.normal(size=xs.size)
        data = Dataset(xs, y, (0.0, 1.0))
        s = gibbs_beta(s, data, hp, rng_b)
        s = update_hypers(s, data, hp, rng_b)
        cond[i] = stats_of(s)
    mean_a = marg.mean(axis=0)
    se_a = marg.std(axis=0, ddof=1) / math.sqrt(n_iter)
    n_batch = 50
    batches = cond.reshape(n_batch, n_iter // n_batch, -1).mean(axis=1)
    mean_b = cond.mean(axis=0)
    se_b = batches.std(axis=0, ddof=1) / math.sqrt(n_batch)
    z = (mean_a - mean_b) / np.sqrt(se_a**2 + se_b**2)
    worst_z = float(np.max(np.abs(z)))
    elapsed = _budget(6, t0, 300)
    ok = worst_rel < 1e-6 and worst_z <= 4.0
    _report(6, ok,
            f"mixture-weight rel err {worst_rel:.1e}, max |z| {worst_z:.2f}, "
            f"{elapsed:.1f}s")


# -- 7-9: full posterior quality benchmarks ---------------------------------

# full-length chains; thinning only reduces stored draws, not iterations
FULL_CHAIN = ChainConfig(thin=5)


def test_acceptance_07_imse_benchmarks():
    t0 = time.perf_counter()
    means = {}
    for name in ("f4-lownoise", "f2-lownoise"):
        scen = named_scenario(name, replicates=10, chain=FULL_CHAIN)
        recs = run_replicates(scen, seed=700)
        means[name] = float(np.mean([r["imse"] for r in recs]))
    elapsed = _budget(7, t0, 2700)
    ok = means["f4-lownoise"] <= 0.10 and means["f2-lownoise"] <= 0.03
    _report(7, ok,
            f"mean IMSE f4 {means['f4-lownoise']:.4f} (<=0.10), "
            f"f2 {means['f2-lownoise']:.4f} (<=0.03), {elapsed:.0f}s")


def test_acceptance_08_two_extrema_detection():
    t0 = time.perf_counter()
    scen = named_scenario("g7-two-extrema", replicates=10, chain=FULL_CHAIN)
    recs = run_replicates(scen, seed=800)
    hits = sum(r["bf"] > 6 for r in recs)
    elapsed = _budget(8, t0, 3600)
    _report(8, hits >= 7,
            f"BF > 6 in {hits}/10 replicates (need >= 7), {elapsed:.0f}s")


def test_acceptance_09_evidence_grows_with_sample_size():
    t0 = time.perf_counter()
    big = named_scenario("g3-monotone", replicates=10, chain=FULL_CHAIN)
    small = named_scenario("g3-monotone", n=100, replicates=10,
                           chain=FULL_CHAIN)
    recs_big = run_replicates(big, seed=900)
    recs_small = run_replicates(small, seed=900)
    wins = sum(
        rb["bf"] > rs["bf"] for rb, rs in zip(recs_big, recs_small)
    )
    elapsed = _budget(9, t0, 3600)
    _report(9, wins >= 8,
            f"BF(n=400) > BF(n=100) in {wins}/10 paired replicates "
            f"(need >= 8), {elapsed:.0f}s")


# -- 10: bitwise reproducibility of the command-line fit --------------------


def test_acceptance_10_byte_identical_rerun(tmp_path):
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    xs = np.linspace(0, 1, 40)
    ys = 10 * (xs - 0.5) ** 2 + rng.normal(0, 1.0, xs.size)
    data = tmp_path / "data.csv"
    with open(data, "w") as fh:
        fh.write("x,y\n")
        for x, y in zip(xs, ys):
            fh.write(f"{x:.17g},{y:.17g}\n")
    config = tmp_path / "config.json"
    config.write_text(json.dumps(
        {"chain": {"n_iters": 2000, "burn_in": 500}}
    ))
    runner = CliRunner()
    payloads = []
    for name in ("run-a", "run-b"):
        out = tmp_path / name
        result = runner.invoke(cli_main, [
            "fit", "--data", str(data), "--config", str(config),
            "--out", str(out), "--seed", "42",
        ])
        assert result.exit_code == 0, result.output + str(result.exception)
        payloads.append((out / "draws.ndjson").read_bytes())
    elapsed = _budget(10, t0, 300)
    ok = payloads[0] == payloads[1] and len(payloads[0]) > 0
    _report(10, ok, f"draws files identical "
                    f"({len(payloads[0])} bytes), {elapsed:.0f}s")
