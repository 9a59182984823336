"""Posterior sampler: spike/slab Gibbs coefficient updates, random-walk
Metropolis for the change points, reversible-jump knot moves with the
affected coefficients marginalized out, and parallel tempering across a
likelihood-power ladder.

Chain t targets prior * likelihood^kappa_t; only the kappa=1 chain is
recorded.  Passing ``data=None`` disables the likelihood entirely (flat
likelihood), which turns the sampler into a prior sampler -- used for the
prior-recovery correctness checks.  The inner loops live in
``_sampler_kernels`` (compiled); this module owns the bookkeeping.
"""

import bisect
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import betaln, gammaln, ndtr

from . import _kernels
from . import _sampler_kernels as K
from . import model as model_mod
from . import tree as tree_mod
from .basis import KnotVector, gauss_legendre_rule
from .errors import DomainError, InsufficientDataError
from .model import Dataset, Hyperparameters, ModelState
from .tree import (
    ROOT,
    KnotTree,
    _children_fast,
    _depth_fast,
    _parent_fast,
)

# 12-rung likelihood-power ladder used in the reference simulations.
DEFAULT_LADDER = tuple(
    1.0 / d for d in (30, 24, 12, 9, 5, 3.5, 2, 1.7, 1.3, 1.2, 1.1, 1.0)
)

_QMC_GENS = np.sqrt(
    np.array([2.0, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47])
) % 1.0


@dataclass(frozen=True)
class ChainConfig:
    n_iters: int = 50_000
    burn_in: int = 10_000
    thin: int = 1
    temperatures: tuple = DEFAULT_LADDER
    alpha_step: float = 0.1
    seed: int = 0
    # lattice size and shift count for the knot-move orthant estimates
    # (used only when the closed forms for d <= 3 do not apply)
    orthant_points: int = 64
    orthant_shifts: int = 4
    adapt_alpha_step: bool = True
    alpha_accept_target: float = 0.3

    def __post_init__(self):
        temps = tuple(float(t) for t in self.temperatures)
        object.__setattr__(self, "temperatures", temps)
        if not temps or temps[-1] != 1.0:
            raise DomainError("temperature ladder must end at 1")
        if any(t2 <= t1 for t1, t2 in zip(temps, temps[1:])) or temps[0] <= 0:
            raise DomainError("temperatures must be strictly increasing in (0,1]")
        if self.burn_in >= self.n_iters:
            raise DomainError("burn_in must be below n_iters")

    @classmethod
    def from_dict(cls, doc: dict) -> "ChainConfig":
        doc = dict(doc)
        if "temperatures" in doc:
            doc["temperatures"] = tuple(doc["temperatures"])
        return cls(**doc)


@dataclass(frozen=True)
class Draw:
    iteration: int
    state: dict
    loglik: float
    logpost: float
    signature: tuple

    def to_json(self) -> str:
        doc = {"iteration": self.iteration}
        doc.update(self.state)
        doc["loglik"] = self.loglik
        doc["logpost"] = self.logpost
        doc["signature"] = list(self.signature)
        return json.dumps(doc)

    @classmethod
    def from_json(cls, line: str) -> "Draw":
        doc = json.loads(line)
        state = {
            k: doc[k]
            for k in ("tree", "beta0", "beta", "alpha", "pi", "lambda", "sigma2")
        }
        return cls(
            iteration=doc["iteration"],
            state=state,
            loglik=doc["loglik"],
            logpost=doc["logpost"],
            signature=tuple(doc["signature"]),
        )

    def model_state(self) -> ModelState:
        return ModelState.from_dict(self.state)


@dataclass
class Diagnostics:
    alpha_proposed: int = 0
    alpha_accepted: int = 0
    rj_insert_proposed: int = 0
    rj_insert_accepted: int = 0
    rj_delete_proposed: int = 0
    rj_delete_accepted: int = 0
    rj_failures: int = 0
    swap_proposed: list = field(default_factory=list)
    swap_accepted: list = field(default_factory=list)
    tree_size_trace: list = field(default_factory=list)
    logpost_trace: list = field(default_factory=list)

    def rates(self) -> dict:
        def rate(a, p):
            return a / p if p else 0.0

        return {
            "alpha": rate(self.alpha_accepted, self.alpha_proposed),
            "rj_insert": rate(self.rj_insert_accepted, self.rj_insert_proposed),
            "rj_delete": rate(self.rj_delete_accepted, self.rj_delete_proposed),
            "swaps": [
                rate(a, p) for a, p in zip(self.swap_accepted, self.swap_proposed)
            ],
        }

    def to_dict(self) -> dict:
        return {
            "acceptance_rates": self.rates(),
            "rj_failures": self.rj_failures,
            "tree_size_trace": self.tree_size_trace,
            "logpost_trace": self.logpost_trace,
        }


def write_draws(draws, path) -> None:
    with open(path, "w") as fh:
        for d in draws:
            fh.write(d.to_json())
            fh.write("\n")


def read_draws(path) -> list:
    with open(path) as fh:
        return [Draw.from_json(line) for line in fh if line.strip()]


class _FastPrior:
    """log_prior with the normalization constants precomputed (the scipy
    version in model.py is the readable reference; this one runs per draw)."""

    def __init__(self, hp: Hyperparameters):
        self.hp = hp
        self.log_beta_norm = -betaln(hp.nu, hp.omega)
        self.log_gamma_norm = hp.delta * math.log(hp.kappa) - gammaln(hp.delta)
        from scipy.special import gammainc

        self.log_gamma_tail = math.log1p(
            -float(gammainc(hp.delta, hp.kappa * hp.lambda_floor))
        )
        mean = hp.alpha_mean
        self.alpha_mean = mean
        self.log_tn_norm = math.log(ndtr(hp.b - mean) - ndtr(hp.a - mean))
        self.log_prec_norm = hp.sigma2_shape * math.log(hp.sigma2_rate) - gammaln(
            hp.sigma2_shape
        )

    def __call__(self, state: ModelState) -> float:
        hp = self.hp
        total = tree_mod.log_prior(state.tree)
        zero = state.beta == 0
        nz_sum = float(state.beta.sum())
        n_zero = int(zero.sum())
        n_nz = state.beta.size - n_zero
        total += n_zero * math.log(state.pi)
        total += n_nz * (math.log1p(-state.pi) + math.log(state.lam))
        total += -state.lam * nz_sum
        total += -0.5 * math.log(2 * math.pi * hp.c) - 0.5 * state.beta0**2 / hp.c
        total += (
            self.log_beta_norm
            + (hp.nu - 1) * math.log(state.pi)
            + (hp.omega - 1) * math.log1p(-state.pi)
        )
        total += (
            self.log_gamma_norm
            + (hp.delta - 1) * math.log(state.lam)
            - hp.kappa * state.lam
            - self.log_gamma_tail
        )
        for a in state.alpha:
            z = a - self.alpha_mean
            total += -0.5 * math.log(2 * math.pi) - 0.5 * z * z - self.log_tn_norm
        prec = 1.0 / state.sigma2
        total += (
            self.log_prec_norm
            + (hp.sigma2_shape - 1) * math.log(prec)
            - hp.sigma2_rate * prec
            - 2.0 * math.log(state.sigma2)
        )
        return total


def _tuple_keys(t_pad: np.ndarray, order: int) -> list:
    """Byte key of the defining knots of each non-intercept column; two
    columns from different knot sets are the same basis function iff their
    keys match (dyadic knots are exact in binary)."""
    nfull = t_pad.size - order
    return [t_pad[k : k + order + 1].tobytes() for k in range(1, nfull)]


class _Chain:
    """Mutable per-chain working state with cached design structures."""

    def __init__(self, state: ModelState, kappa: float, rng, data, hp, cfg):
        self.kappa = kappa
        self.rng = rng
        self.hp = hp
        self.cfg = cfg
        self.data = data
        self.xw = (
            np.ascontiguousarray(data.xs_working) if data is not None else None
        )
        self.y = np.ascontiguousarray(data.ys) if data is not None else None
        self.tree = state.tree
        self.beta0 = float(state.beta0)
        self.beta = np.asarray(state.beta, dtype=float).copy()
        self.alpha = np.asarray(state.alpha, dtype=float).copy()
        self.pi = float(state.pi)
        self.lam = float(state.lam)
        self.sigma2 = float(state.sigma2)
        self.alpha_step = cfg.alpha_step
        q = (hp.order + hp.h + 1 + 1) // 2  # exact for the integrand degree
        self.gx, self.gw = gauss_legendre_rule(q)
        self.rebuild()

    # -- caches ----------------------------------------------------------
    def rebuild(self):
        kv = KnotVector(model_mod.working_knots(self.tree), self.hp.order)
        self.t_pad = kv.padded
        self.bps = kv.knots
        self.keys = _tuple_keys(self.t_pad, self.hp.order)
        # candidate lists are kept as floats (dyadic labels are exact) so
        # the frequent sorted-list operations avoid Fraction comparisons
        self.ins_cands = [float(l) for l in tree_mod.insertion_candidates(self.tree)]
        self.del_cands = [float(l) for l in tree_mod.deletion_candidates(self.tree)]
        self.del_set = set(self.del_cands)
        if self.data is not None:
            self.mono = self._monomial_designs(self.t_pad, self.bps)
            self.X = self._design_from_mono(self.mono)
            self.col_sq = np.einsum("ij,ij->j", self.X, self.X)
            self.refresh_fit()
        else:
            self.X = None
            self.loglik = 0.0

    def _monomial_designs(self, t_pad, bps):
        """Design-matrix stack with monomial weights x^m, m = 0..h; the
        design for any change-point vector is a linear combination of these,
        so alpha proposals avoid re-integrating the basis."""
        return _kernels.lx_monomial_designs(
            t_pad, self.hp.order, bps, self.hp.h + 1, self.xw,
            self.gx, self.gw,
        )

    def _design_from_mono(self, mono):
        return _kernels.design_from_mono(mono, self.alpha, float(self.hp.m))

    def refresh_fit(self):
        self.fit = self.X @ np.concatenate([[self.beta0], self.beta])
        resid = self.y - self.fit
        self.rss = float(resid @ resid)
        self.update_loglik()

    def update_loglik(self):
        n = self.y.size
        self.loglik = (
            -0.5 * n * math.log(2 * math.pi * self.sigma2)
            - 0.5 * self.rss / self.sigma2
        )

    @property
    def sigma2_tempered(self) -> float:
        return self.sigma2 / self.kappa

    def state(self) -> ModelState:
        return ModelState(
            self.tree,
            self.beta0,
            self.beta.copy(),
            self.alpha.copy(),
            self.pi,
            self.lam,
            self.sigma2,
        )

    _SWAP_KEYS = (
        "tree", "beta0", "beta", "alpha", "pi", "lam", "sigma2",
        "t_pad", "bps", "keys", "ins_cands", "del_cands", "del_set",
        "X", "col_sq", "mono",
    )

    def swap_payload(self):
        payload = {k: getattr(self, k, None) for k in self._SWAP_KEYS}
        payload["fit"] = getattr(self, "fit", None)
        payload["rss"] = getattr(self, "rss", None)
        return payload

    def load_payload(self, payload):
        for k, v in payload.items():
            setattr(self, k, v)
        if self.data is not None:
            self.update_loglik()
        else:
            self.loglik = 0.0


# -- coefficient Gibbs sweep -----------------------------------------------


def _gibbs_beta_chain(chain: _Chain):
    hp, rng = chain.hp, chain.rng
    if chain.data is None:
        # flat likelihood: the full conditional is the prior
        n = chain.beta.size
        chain.beta = np.where(
            rng.random(n) < chain.pi,
            0.0,
            rng.exponential(1.0 / chain.lam, size=n),
        )
        chain.beta0 = rng.normal(0.0, math.sqrt(hp.c))
        return
    chain.beta0, chain.rss = K.gibbs_sweep_nb(
        rng, chain.X, chain.col_sq, chain.y, chain.fit, chain.beta,
        chain.beta0, chain.pi, chain.lam, chain.sigma2_tempered, hp.c,
    )
    chain.update_loglik()


# -- change-point Metropolis -----------------------------------------------


def _update_alpha_chain(chain: _Chain, diag, iteration: int):
    hp, rng, cfg = chain.hp, chain.rng, chain.cfg
    if chain.data is None:
        n_acc = 0
        for h in range(chain.alpha.size):
            prop = chain.alpha[h] + rng.normal() * chain.alpha_step
            if not hp.a <= prop <= hp.b:
                continue
            if any(
                abs(prop - chain.alpha[h2]) < hp.min_alpha_sep
                for h2 in range(chain.alpha.size)
                if h2 != h
            ):
                continue
            mean = hp.alpha_mean
            log_acc = -0.5 * ((prop - mean) ** 2 - (chain.alpha[h] - mean) ** 2)
            if math.log(rng.random()) < log_acc:
                chain.alpha[h] = prop
                n_acc += 1
    else:
        n_acc, chain.rss = K.alpha_sweep_nb(
            rng, chain.mono, chain.alpha, float(hp.m), chain.X,
            chain.col_sq, chain.fit, chain.beta0, chain.beta, chain.y,
            chain.rss, chain.sigma2, chain.kappa, hp.a, hp.b,
            hp.alpha_mean, hp.min_alpha_sep, chain.alpha_step,
        )
        chain.update_loglik()
    if diag is not None:
        diag.alpha_proposed += chain.alpha.size
        diag.alpha_accepted += n_acc
    if cfg.adapt_alpha_step and iteration < cfg.burn_in and chain.alpha.size:
        gain = min(0.05, 10.0 / (100.0 + iteration))
        rate = n_acc / chain.alpha.size
        chain.alpha_step *= math.exp(gain * (rate - cfg.alpha_accept_target))


# -- hyperparameter Gibbs --------------------------------------------------


def _sample_trunc_gamma_fast(shape, rate, floor, rng) -> float:
    """Rejection draw from Gamma(shape, rate) truncated to (floor, inf);
    same distribution as the inverse-CDF reference, without the special
    function evaluations.  Falls back to it after repeated misses."""
    scale = 1.0 / rate
    for _ in range(100):
        val = rng.gamma(shape, scale)
        if val > floor:
            return float(val)
    return model_mod.sample_trunc_gamma(shape, rate, floor, rng)


def _update_hypers_chain(chain: _Chain):
    hp, rng = chain.hp, chain.rng
    nonzero = chain.beta > 0
    n_nz = int(nonzero.sum())
    n_zero = chain.beta.size - n_nz
    chain.pi = float(rng.beta(hp.nu + n_zero, hp.omega + n_nz))
    chain.pi = min(max(chain.pi, 1e-12), 1 - 1e-12)
    chain.lam = _sample_trunc_gamma_fast(
        hp.delta + n_nz,
        hp.kappa + float(chain.beta[nonzero].sum()),
        hp.lambda_floor,
        rng,
    )
    if chain.data is None:
        chain.sigma2 = float(1.0 / rng.gamma(hp.sigma2_shape, 1.0 / hp.sigma2_rate))
    else:
        shape = hp.sigma2_shape + chain.kappa * chain.y.size / 2.0
        rate = hp.sigma2_rate + chain.kappa * chain.rss / 2.0
        rate = min(rate, 1e290)
        draw = 1.0 / rng.gamma(shape, 1.0 / rate)
        # numerical guard for the cold rungs' heavy-tailed excursions
        chain.sigma2 = float(min(max(draw, 1e-100), 1e100))
        chain.update_loglik()


# -- reversible-jump knot move ---------------------------------------------


def _propose_fast(chain: _Chain, rng):
    """Insert/delete proposal off the cached candidate lists, with the
    reverse probability and tree-prior change computed incrementally.
    Returns (kind, label, forward_prob, reverse_prob, prior_log_ratio)."""
    dels = chain.del_cands
    if not dels or rng.random() < 0.5:
        kind = "insert"
        cands = chain.ins_cands
    else:
        kind = "delete"
        cands = dels
    label = Fraction(cands[int(rng.integers(len(cands)))])
    forward = (1.0 if not dels else 0.5) / len(cands)
    n = _depth_fast(label)
    p_slot = 0.5**n  # success prob of the experiment that creates this node
    p_child = 0.5 ** (n + 1)
    prior_delta = (
        math.log(p_slot) - math.log1p(-p_slot) + 2.0 * math.log1p(-p_child)
    )
    if kind == "insert":
        par = _parent_fast(label)
        n_del_new = len(dels) + 1 - (1 if float(par) in chain.del_set else 0)
        reverse = 0.5 / n_del_new
        return kind, label, forward, reverse, prior_delta
    par = _parent_fast(label)
    n_ins_new = len(chain.ins_cands) - 1
    n_del_new = len(dels) - 1
    if par != ROOT:
        left, right = _children_fast(par)
        sibling = right if left == label else left
        if sibling not in chain.tree.nodes:
            n_del_new += 1
    kind_prob = 1.0 if n_del_new == 0 else 0.5
    reverse = kind_prob / n_ins_new
    return kind, label, forward, reverse, -prior_delta


def _apply_move_bookkeeping(chain: _Chain, kind: str, label):
    """Update the tree and the cached candidate lists after an accepted
    move (nodes stay a valid tree by construction)."""
    label_f = float(label)
    if kind == "insert":
        new_tree = KnotTree._from_valid(chain.tree.nodes | {label})
        chain.ins_cands.remove(label_f)
        for ch in _children_fast(label):
            bisect.insort(chain.ins_cands, float(ch))
        par_f = float(_parent_fast(label))
        if par_f in chain.del_set:
            chain.del_cands.remove(par_f)
            chain.del_set.discard(par_f)
        bisect.insort(chain.del_cands, label_f)
        chain.del_set.add(label_f)
    else:
        new_tree = KnotTree._from_valid(chain.tree.nodes - {label})
        for ch in _children_fast(label):
            chain.ins_cands.remove(float(ch))
        bisect.insort(chain.ins_cands, label_f)
        chain.del_cands.remove(label_f)
        chain.del_set.discard(label_f)
        par = _parent_fast(label)
        if par != ROOT:
            left, right = _children_fast(par)
            sibling = right if left == label else left
            if sibling not in new_tree.nodes:
                bisect.insort(chain.del_cands, float(par))
                chain.del_set.add(float(par))
    chain.tree = new_tree


def _pad_knots(bps: np.ndarray, order: int) -> np.ndarray:
    out = np.empty(bps.size + 2 * order)
    out[:order] = bps[0]
    out[order : order + bps.size] = bps
    out[order + bps.size :] = bps[-1]
    return out


def _moved_breakpoints(bps: np.ndarray, kind: str, label) -> np.ndarray:
    """Breakpoint array after inserting/deleting the knot at `label`
    (dyadic labels are exact as floats, shifted to working units)."""
    fl = float(label) - 0.5
    pos = int(np.searchsorted(bps, fl))
    if kind == "insert":
        out = np.empty(bps.size + 1)
        out[:pos] = bps[:pos]
        out[pos] = fl
        out[pos + 1 :] = bps[pos:]
        return out
    out = np.empty(bps.size - 1)
    out[:pos] = bps[:pos]
    out[pos:] = bps[pos + 1 :]
    return out


def _rj_move_chain(chain: _Chain, diag):
    hp, rng, cfg = chain.hp, chain.rng, chain.cfg
    kind, label, forward, reverse, log_h = _propose_fast(chain, rng)
    log_h += math.log(reverse) - math.log(forward)
    if diag is not None:
        if kind == "insert":
            diag.rj_insert_proposed += 1
        else:
            diag.rj_delete_proposed += 1

    if chain.data is None:
        if math.log(rng.random()) < log_h:
            _apply_tree_flat(chain, kind, label)
            if diag is not None:
                if kind == "insert":
                    diag.rj_insert_accepted += 1
                else:
                    diag.rj_delete_accepted += 1
        return

    order = hp.order
    bps_new = _moved_breakpoints(chain.bps, kind, label)
    t_pad_new = _pad_knots(bps_new, order)
    mono_new = chain._monomial_designs(t_pad_new, bps_new)
    Xnew = chain._design_from_mono(mono_new)

    # Only the basis functions whose defining knots change are affected;
    # they occupy a contiguous run of columns around the moved knot.
    v = float(label) - 0.5
    nfull_old = chain.X.shape[1]
    opos = int(np.searchsorted(chain.bps, v)) + order
    lo = max(1, opos - order)
    if kind == "insert":
        hi_old = min(opos - 1, nfull_old - 1)
        hi_new = hi_old + 1
    else:
        hi_old = min(opos, nfull_old - 1)
        hi_new = hi_old - 1

    rr, G_old, xr_old, G_new, xr_new = K.rj_block_stats(
        chain.X, Xnew, lo, hi_old, hi_new, chain.beta, chain.fit, chain.y
    )
    s2t = chain.sigma2_tempered
    # columns with (near-)zero norm contribute a spike/slab marginal of one
    # and are left at zero; the relative floor also keeps ill-conditioned
    # single-column patterns out of the enumeration
    d_old = np.diag(G_old)
    d_new = np.diag(G_new)
    floor = 1e-9 * max(d_old.max(initial=0.0), d_new.max(initial=0.0), 1.0)
    live_old = np.flatnonzero(d_old > floor)
    live_new = np.flatnonzero(d_new > floor)
    terms_old = np.empty(1 << live_old.size)
    terms_new = np.empty(1 << live_new.size)
    logml_old = K.rj_pattern_terms(
        rng, G_old, xr_old, rr, s2t, chain.pi, chain.lam, _QMC_GENS,
        cfg.orthant_points, cfg.orthant_shifts, live_old, terms_old,
    )
    logml_new = K.rj_pattern_terms(
        rng, G_new, xr_new, rr, s2t, chain.pi, chain.lam, _QMC_GENS,
        cfg.orthant_points, cfg.orthant_shifts, live_new, terms_new,
    )
    if math.isnan(logml_old) or math.isnan(logml_new):
        if diag is not None:
            diag.rj_failures += 1
        return
    log_h += logml_new - logml_old
    if math.log(rng.random()) >= log_h:
        return
    # accepted: carry shared coefficients over, redraw the affected block
    drawn = K.rj_sample_affected(
        rng, G_new, xr_new, s2t, chain.lam, live_new, terms_new
    )
    if not np.all(np.isfinite(drawn)) or np.max(np.abs(drawn), initial=0.0) > 1e8:
        # the accepted pattern was numerically degenerate; abandon the move
        if diag is not None:
            diag.rj_failures += 1
        return
    nfull_new = Xnew.shape[1]
    beta_new = np.empty(nfull_new - 1)
    beta_new[: lo - 1] = chain.beta[: lo - 1]
    beta_new[lo - 1 : hi_new] = drawn
    beta_new[hi_new:] = chain.beta[hi_old:]
    _apply_move_bookkeeping(chain, kind, label)
    chain.beta = beta_new
    chain.t_pad = t_pad_new
    chain.bps = bps_new
    chain.keys = _tuple_keys(t_pad_new, order)
    chain.mono = mono_new
    chain.X = Xnew
    chain.col_sq = np.einsum("ij,ij->j", Xnew, Xnew)
    chain.refresh_fit()
    if diag is not None:
        if kind == "insert":
            diag.rj_insert_accepted += 1
        else:
            diag.rj_delete_accepted += 1


def _apply_tree_flat(chain: _Chain, kind: str, label):
    """Tree change under a flat likelihood: shared coefficients carry over,
    new columns come from the spike/slab prior."""
    hp, rng = chain.hp, chain.rng
    old_keys = chain.keys
    old_beta = chain.beta
    chain.bps = _moved_breakpoints(chain.bps, kind, label)
    _apply_move_bookkeeping(chain, kind, label)
    chain.t_pad = _pad_knots(chain.bps, hp.order)
    chain.keys = _tuple_keys(chain.t_pad, hp.order)
    old_index = {key: i for i, key in enumerate(old_keys)}
    beta_new = np.empty(len(chain.keys))
    for ni, key in enumerate(chain.keys):
        oi = old_index.get(key)
        if oi is not None:
            beta_new[ni] = old_beta[oi]
        elif rng.random() < chain.pi:
            beta_new[ni] = 0.0
        else:
            beta_new[ni] = rng.exponential(1.0 / chain.lam)
    chain.beta = beta_new


# -- public single-step wrappers -------------------------------------------


def _make_chain(state, data, hp, rng, kappa=1.0, cfg=None) -> _Chain:
    cfg = cfg or ChainConfig(n_iters=2, burn_in=1, adapt_alpha_step=False)
    return _Chain(state, kappa, rng, data, hp, cfg)


def spike_slab_weight(xr: float, bb: float, pi: float, lam: float,
                      sigma2: float) -> float:
    """P(beta_k != 0 | rest) for one coefficient: bb is the column's squared
    norm, xr its cross product with the residual that excludes the column,
    sigma2 the (tempered) noise variance.  This is the weight the Gibbs
    sweep uses."""
    log_odds = K.spike_slab_log_odds(
        float(xr), float(bb), float(pi), float(lam), float(sigma2)
    )
    if log_odds > 700.0:
        return 1.0
    if log_odds < -700.0:
        return 0.0
    return 1.0 / (1.0 + math.exp(-log_odds))


def gibbs_beta(state: ModelState, data, hp: Hyperparameters, rng, kappa=1.0):
    """One spike/slab Gibbs sweep over the coefficients and the intercept."""
    chain = _make_chain(state, data, hp, rng, kappa)
    _gibbs_beta_chain(chain)
    return chain.state()


def update_alpha(state: ModelState, data, hp: Hyperparameters, rng, step=0.1,
                 kappa=1.0):
    """One Metropolis sweep over the change points."""
    cfg = ChainConfig(n_iters=2, burn_in=1, alpha_step=step,
                      adapt_alpha_step=False)
    chain = _Chain(state, kappa, rng, data, hp, cfg)
    _update_alpha_chain(chain, None, iteration=10**9)
    return chain.state()


def update_hypers(state: ModelState, data, hp: Hyperparameters, rng, kappa=1.0):
    """Conjugate draws of pi, lambda, and the noise variance."""
    chain = _make_chain(state, data, hp, rng, kappa)
    _update_hypers_chain(chain)
    return chain.state()


def rj_knot_move(state: ModelState, data, hp: Hyperparameters, rng, kappa=1.0,
                 cfg: ChainConfig | None = None):
    """One knot insertion/deletion attempt with marginalized acceptance."""
    chain = _make_chain(state, data, hp, rng, kappa, cfg)
    _rj_move_chain(chain, None)
    return chain.state()


# -- tempering driver ------------------------------------------------------


def initial_state(data, hp: Hyperparameters, rng) -> ModelState:
    tree = KnotTree.root_only()
    n_coef = len(tree) + 2 + hp.order - 1
    alpha = model_mod.sample_alpha_prior(hp, rng)
    if data is not None:
        beta0 = float(np.mean(data.ys))
        sigma2 = float(max(np.var(data.ys), 1e-6))
    else:
        beta0 = 0.0
        sigma2 = 1.0
    return ModelState(
        tree,
        beta0,
        np.zeros(n_coef),
        alpha,
        pi=hp.nu / (hp.nu + hp.omega),
        lam=max(hp.delta / hp.kappa, hp.lambda_floor * 10),
        sigma2=sigma2,
    )


def run_tempered(data, hp: Hyperparameters, config: ChainConfig):
    """Run the full tempered sampler; returns (draws, diagnostics).

    ``data=None`` runs with a flat likelihood (prior sampling mode).
    """
    if data is not None and data.n < hp.order + 2:
        raise InsufficientDataError(
            f"need at least order+2={hp.order + 2} observations, got {data.n}"
        )
    temps = config.temperatures
    ss = np.random.SeedSequence(config.seed)
    seeds = ss.spawn(len(temps) + 1)
    swap_rng = np.random.default_rng(seeds[-1])
    chains = []
    for t, child in zip(temps, seeds[:-1]):
        rng = np.random.default_rng(child)
        chains.append(_Chain(initial_state(data, hp, rng), t, rng, data, hp, config))
    diag = Diagnostics(
        swap_proposed=[0] * max(len(temps) - 1, 0),
        swap_accepted=[0] * max(len(temps) - 1, 0),
    )
    fast_prior = _FastPrior(hp)
    draws = []
    target = chains[-1]
    for it in range(config.n_iters):
        for chain in chains:
            is_target = chain is target
            _gibbs_beta_chain(chain)
            _update_alpha_chain(chain, diag if is_target else None, it)
            _update_hypers_chain(chain)
            _rj_move_chain(chain, diag if is_target else None)
        if len(chains) > 1:
            pair = int(swap_rng.integers(len(chains) - 1))
            lo, hi = chains[pair], chains[pair + 1]
            delta = (lo.kappa - hi.kappa) * (hi.loglik - lo.loglik)
            diag.swap_proposed[pair] += 1
            if math.log(swap_rng.random()) < delta:
                diag.swap_accepted[pair] += 1
                p_lo, p_hi = lo.swap_payload(), hi.swap_payload()
                lo.load_payload(p_hi)
                hi.load_payload(p_lo)
        if it >= config.burn_in and (it - config.burn_in) % config.thin == 0:
            st = target.state()
            loglik = target.loglik if data is not None else 0.0
            logpost = loglik + fast_prior(st)
            draws.append(
                Draw(
                    iteration=it,
                    state=st.to_dict(),
                    loglik=loglik,
                    logpost=logpost,
                    signature=model_mod.shape_signature(st),
                )
            )
            diag.tree_size_trace.append(len(st.tree))
            diag.logpost_trace.append(logpost)
    return draws, diag
