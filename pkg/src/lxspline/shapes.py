"""Shape hypotheses over posterior draws and Bayes factors between them.

A draw's shape is summarized by its signature: the counts of change points
below, inside, and above the working predictor interval.  A hypothesis is a
set of signatures; the Bayes factor is the posterior-odds over prior-odds
estimator, with the prior mass of each signature available in closed form
from the change-point prior.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import DomainError, HypothesisError
from .model import WORKING_HI, WORKING_LO, Hyperparameters, ModelState, working_knots
from .basis import KnotVector


def all_signatures(h: int) -> list:
    """Every (n_below, n_in, n_above) with the three counts summing to h."""
    out = []
    for below in range(h + 1):
        for inside in range(h + 1 - below):
            out.append((below, inside, h - below - inside))
    return out


@dataclass(frozen=True)
class ShapeHypothesis:
    signatures: frozenset
    label: str = ""

    def __post_init__(self):
        sigs = frozenset(tuple(int(v) for v in s) for s in self.signatures)
        object.__setattr__(self, "signatures", sigs)
        if not sigs:
            raise HypothesisError("hypothesis must contain at least one signature")
        totals = {sum(s) for s in sigs}
        if len(totals) != 1 or any(v < 0 for s in sigs for v in s):
            raise HypothesisError(
                "signatures must be nonnegative triples with a common total"
            )

    @property
    def h(self) -> int:
        return sum(next(iter(self.signatures)))

    def contains(self, signature) -> bool:
        return tuple(signature) in self.signatures

    def complement(self, label: str = "") -> "ShapeHypothesis":
        rest = set(all_signatures(self.h)) - self.signatures
        if not rest:
            raise HypothesisError("hypothesis already covers every signature")
        return ShapeHypothesis(frozenset(rest), label)

    @classmethod
    def monotone(cls, h: int) -> "ShapeHypothesis":
        """No interior change point: the curve is monotone on the interval."""
        sigs = {s for s in all_signatures(h) if s[1] == 0}
        return cls(frozenset(sigs), "monotone")

    @classmethod
    def has_extrema(cls, h: int, count: int) -> "ShapeHypothesis":
        """Exactly `count` interior change points."""
        sigs = {s for s in all_signatures(h) if s[1] == count}
        if not sigs:
            raise HypothesisError(f"no signature with {count} interior points for H={h}")
        return cls(frozenset(sigs), f"has-extrema({count})")

    @classmethod
    def from_spec(cls, spec, h: int) -> "ShapeHypothesis":
        """Parse a hypothesis spec: 'monotone', 'non-monotone',
        'has-extrema(F)', or an explicit signature list."""
        if isinstance(spec, str):
            text = spec.strip().lower()
            if text == "monotone":
                return cls.monotone(h)
            if text in ("non-monotone", "nonmonotone"):
                return cls.monotone(h).complement("non-monotone")
            if text.startswith("has-extrema(") and text.endswith(")"):
                return cls.has_extrema(h, int(text[len("has-extrema(") : -1]))
            raise HypothesisError(f"cannot parse hypothesis spec {spec!r}")
        return cls(frozenset(tuple(s) for s in spec), "custom")


def first_extremum_kind(signature, m_scale: float) -> str | None:
    """Whether the leftmost interior extremum is a max or a min, from the
    sign of the scale and the derivative's polynomial factor."""
    below, inside, above = signature
    if inside == 0:
        return None
    sign = (1 if m_scale > 0 else -1) * (-1) ** (inside + above)
    return "max" if sign > 0 else "min"


def prior_shape_prob(hyp: ShapeHypothesis, hp: Hyperparameters) -> float:
    """Prior mass of the hypothesis under iid truncated-normal change points:
    multinomial over (below, inside, above) cell probabilities."""
    if hyp.h != hp.h:
        raise HypothesisError(f"hypothesis is for H={hyp.h}, model has H={hp.h}")
    mean = hp.alpha_mean
    denom = ndtr(hp.b - mean) - ndtr(hp.a - mean)
    p_below = (ndtr(WORKING_LO - mean) - ndtr(hp.a - mean)) / denom
    p_above = (ndtr(hp.b - mean) - ndtr(WORKING_HI - mean)) / denom
    p_in = max(1.0 - p_below - p_above, 0.0)
    total = 0.0
    for below, inside, above in hyp.signatures:
        coef = math.factorial(hp.h) / (
            math.factorial(below) * math.factorial(inside) * math.factorial(above)
        )
        total += coef * p_below**below * p_in**inside * p_above**above
    return float(total)


def _signature_of(draw) -> tuple:
    if hasattr(draw, "signature"):
        return tuple(draw.signature)
    alpha = np.asarray(draw["alpha"] if isinstance(draw, dict) else draw.alpha)
    below = int(np.sum(alpha <= WORKING_LO))
    above = int(np.sum(alpha >= WORKING_HI))
    return below, alpha.size - below - above, above


def signature_counts(draws) -> dict:
    counts: dict = {}
    for d in draws:
        sig = _signature_of(d)
        counts[sig] = counts.get(sig, 0) + 1
    return counts


def flat_region_count(draws, hp: Hyperparameters) -> int:
    """Draws where some interior change point is spanned only by zeroed-out
    basis columns, so it does not mark a unique extremum."""
    tally = 0
    for d in draws:
        state = d.model_state() if hasattr(d, "model_state") else d
        if not isinstance(state, ModelState):
            state = ModelState.from_dict(state)
        interior = [
            a for a in state.alpha if WORKING_LO < a < WORKING_HI
        ]
        if not interior:
            continue
        kv = KnotVector(working_knots(state.tree), hp.order)
        flagged = False
        for a in interior:
            spanning = [
                k
                for k in range(1, kv.n_basis + 1)
                if kv.support(k)[0] < a < kv.support(k)[1]
            ]
            if spanning and all(state.beta[k - 1] == 0.0 for k in spanning):
                flagged = True
                break
        tally += int(flagged)
    return tally


def bayes_factor(draws, hyp1: ShapeHypothesis, hyp2: ShapeHypothesis,
                 hp: Hyperparameters) -> dict:
    """Posterior-odds over prior-odds Bayes factor for hyp1 against hyp2.

    Returns a report dict with the estimate, draw counts, prior masses, and a
    lower-bound flag when hyp2 received no draws (count substituted by 1).
    """
    if not draws:
        raise DomainError("draw set is empty")
    if hyp1.signatures & hyp2.signatures:
        raise HypothesisError("hypotheses overlap")
    counts = signature_counts(draws)
    n1 = sum(c for s, c in counts.items() if hyp1.contains(s))
    n2 = sum(c for s, c in counts.items() if hyp2.contains(s))
    if n1 == 0 and n2 == 0:
        raise HypothesisError("no draws fall in either hypothesis")
    q1 = prior_shape_prob(hyp1, hp)
    q2 = prior_shape_prob(hyp2, hp)
    lower_bound = n2 == 0
    bf = (n1 / max(n2, 1)) * (q2 / q1)
    return {
        "bf": float(bf),
        "lower_bound": lower_bound,
        "counts": {"hyp1": n1, "hyp2": n2, "total": len(draws)},
        "prior_mass": {"hyp1": q1, "hyp2": q2},
        "labels": {"hyp1": hyp1.label, "hyp2": hyp2.label},
        "first_extremum": {
            "hyp1": sorted(
                {first_extremum_kind(s, hp.m) for s in hyp1.signatures} - {None}
            ),
            "hyp2": sorted(
                {first_extremum_kind(s, hp.m) for s in hyp2.signatures} - {None}
            ),
        },
    }


def monotonicity_test(draws, direction: str, hp: Hyperparameters) -> dict:
    """Bayes factor of monotone against non-monotone (direction='monotone')
    or the reverse."""
    mono = ShapeHypothesis.monotone(hp.h)
    non = mono.complement("non-monotone")
    if direction == "monotone":
        return bayes_factor(draws, mono, non, hp)
    if direction in ("non-monotone", "nonmonotone"):
        return bayes_factor(draws, non, mono, hp)
    raise HypothesisError(f"unknown direction {direction!r}")


def shape_report(draws, hyp1: ShapeHypothesis, hyp2: ShapeHypothesis,
                 hp: Hyperparameters) -> dict:
    report = bayes_factor(draws, hyp1, hyp2, hp)
    report["signature_counts"] = {
        "/".join(map(str, s)): c for s, c in sorted(signature_counts(draws).items())
    }
    report["flat_region_draws"] = flat_region_count(draws, hp)
    return report


def write_report(report: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
