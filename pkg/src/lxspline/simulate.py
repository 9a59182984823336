"""Simulation harness: benchmark true curves on [0,1], error metrics, and
seeded replicate runs of the full sampler."""

import csv
import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtr

from .errors import DomainError, ScenarioError
from .model import Dataset, Hyperparameters
from .sampler import ChainConfig, run_tempered
from .shapes import ShapeHypothesis, bayes_factor

TRUE_FUNCTIONS = {
    "f1": lambda x: 10 * x**2,
    "f2": lambda x: 2 + 20 * ndtr((x - 0.5) / 0.071),
    "f3": lambda x: 5 * np.cos(np.pi * x),
    "f4": lambda x: 10 * (x - 0.5) ** 2,
    "f5": lambda x: -2.5 + 10 * np.exp(-50 * (x - 0.35) ** 2),
    "f6": lambda x: 1 + 2.5 * np.sin(2 * np.pi * (x + 8)) + 10 * x,
    "f7": lambda x: 5 * np.sin(2 * np.pi * x) / (x + 0.75) ** 3 - 2.5 * (x + 10.5),
    "g1": lambda x: 2 + 0.5 * x + ndtr((x - 0.5) / 0.071),
    "g2": lambda x: 0.5 * np.sin(2 * np.pi * (x + 8)) + 4.75 * x,
    "g3": lambda x: 1 + 2.25 * x,
    "g4": lambda x: -2 * (x - 0.75) ** 2,
    "g5": lambda x: 1 + 2 * x - 1.56 * np.exp(-50 * (x - 0.5) ** 2),
    "g6": lambda x: 15 * (x - 0.5) ** 3 * (x < 0.5) + 0.3 * (x - 0.5)
    - np.exp(-250 * (x - 0.25) ** 2),
    "g7": lambda x: 0.85 * np.sin(2 * np.pi * (x + 8)) + 4.75 * x,
    "g8": lambda x: 1 + 2 * x - 1.56 * np.exp(-50 * (x - 0.5) ** 2),
    "g9": lambda x: 5 * np.sin(2 * np.pi * x) / (x + 0.75) ** 3
    - 2.5 * (x + 10.5) + 2,
}


def true_function(fn_id: str, x):
    """Benchmark curve value; x in [0, 1]."""
    if fn_id not in TRUE_FUNCTIONS:
        raise ScenarioError(f"unknown function id {fn_id!r}")
    xs = np.asarray(x, dtype=float)
    if xs.size and (xs.min() < 0 or xs.max() > 1):
        raise DomainError("benchmark curves are defined on [0, 1]")
    out = TRUE_FUNCTIONS[fn_id](xs)
    return out if np.ndim(x) else float(out)


def imse(fitted, truth) -> float:
    """Mean squared error over the design grid."""
    fitted = np.asarray(fitted, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if fitted.shape != truth.shape:
        raise DomainError("fitted and truth grids differ in length")
    return float(np.mean((fitted - truth) ** 2))


def roc_auc(scores, labels) -> float:
    """Mann-Whitney AUC with ties counted one half."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    pos = scores[labels]
    neg = scores[~labels]
    if pos.size == 0 or neg.size == 0:
        raise DomainError("need at least one positive and one negative label")
    diff = pos[:, None] - neg[None, :]
    return float((np.sum(diff > 0) + 0.5 * np.sum(diff == 0)) / (pos.size * neg.size))


@dataclass(frozen=True)
class Scenario:
    fn_id: str
    n: int = 100
    sigma2: float = 1.0
    replicates: int = 10
    grid_size: int = 100
    chain: ChainConfig = field(default_factory=ChainConfig)
    hp: Hyperparameters = field(default_factory=Hyperparameters)
    hyp1: str | None = None
    hyp2: str | None = None

    def __post_init__(self):
        if self.fn_id not in TRUE_FUNCTIONS:
            raise ScenarioError(f"unknown function id {self.fn_id!r}")
        if self.n < 10:
            raise DomainError("scenario needs n >= 10")
        if self.sigma2 <= 0:
            raise DomainError("scenario needs sigma2 > 0")


# Named scenarios runnable from the command line.
NAMED_SCENARIOS = {
    "f4-lownoise": dict(fn_id="f4", sigma2=1.0),
    "f4-highnoise": dict(fn_id="f4", sigma2=4.0),
    "f2-lownoise": dict(fn_id="f2", sigma2=1.0),
    "g3-monotone": dict(fn_id="g3", sigma2=1.0, n=400,
                        hyp1="monotone", hyp2="non-monotone"),
    "g5-dip": dict(fn_id="g5", sigma2=1.0, n=400,
                   hyp1="non-monotone", hyp2="monotone"),
    "g7-two-extrema": dict(fn_id="g7", sigma2=1.0, n=300,
                           hyp1="has-extrema(2)", hyp2="monotone"),
}


def named_scenario(name: str, **overrides) -> Scenario:
    if name not in NAMED_SCENARIOS:
        raise ScenarioError(f"unknown scenario {name!r}")
    kw = dict(NAMED_SCENARIOS[name])
    kw.update(overrides)
    return Scenario(**kw)


def generate_data(scenario: Scenario, rng: np.random.Generator) -> Dataset:
    """Equidistant design on [0,1] with Gaussian noise."""
    xs = np.linspace(0.0, 1.0, scenario.n)
    ys = true_function(scenario.fn_id, xs) + rng.normal(
        0.0, math.sqrt(scenario.sigma2), size=scenario.n
    )
    return Dataset(xs, ys, (0.0, 1.0))


def posterior_mean_curve(draws, data: Dataset, hp: Hyperparameters, xs) -> np.ndarray:
    from .model import curve_eval

    total = np.zeros(np.asarray(xs).size)
    for d in draws:
        total += curve_eval(d.model_state(), data, hp, xs)
    return total / len(draws)


def run_replicates(scenario: Scenario, rng=None, seed: int | None = None) -> list:
    """Run the scenario end to end; one record per replicate with the IMSE of
    the posterior-mean curve, the shape Bayes factor (when the scenario names
    hypotheses), and the wall-clock seconds.  Deterministic given the seed."""
    if seed is None:
        seed = scenario.chain.seed
    records = []
    grid = np.linspace(0.0, 1.0, scenario.grid_size)
    truth = true_function(scenario.fn_id, grid)
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(scenario.replicates)
    for rep, child in enumerate(children):
        t0 = time.perf_counter()
        rep_seed = int(child.generate_state(1)[0] % 2**31)
        data = generate_data(scenario, np.random.default_rng(child))
        cfg = replace(scenario.chain, seed=rep_seed)
        draws, diag = run_tempered(data, scenario.hp, cfg)
        mean_curve = posterior_mean_curve(draws, data, scenario.hp, grid)
        record = {
            "scenario": scenario.fn_id,
            "replicate": rep,
            "seed": rep_seed,
            "imse": imse(mean_curve, truth),
            "bf": float("nan"),
            "seconds": 0.0,
        }
        if scenario.hyp1 and scenario.hyp2:
            h1 = ShapeHypothesis.from_spec(scenario.hyp1, scenario.hp.h)
            h2 = ShapeHypothesis.from_spec(scenario.hyp2, scenario.hp.h)
            if h1.signatures & h2.signatures:
                raise ScenarioError("scenario hypotheses overlap")
            report = bayes_factor(draws, h1, h2, scenario.hp)
            record["bf"] = report["bf"]
        record["seconds"] = time.perf_counter() - t0
        records.append(record)
    return records


FIELDS = ("scenario", "replicate", "seed", "imse", "bf", "seconds")


def write_records(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=FIELDS)
        writer.writeheader()
        for rec in records:
            writer.writerow({k: rec[k] for k in FIELDS})


def summarize(records) -> dict:
    if not records:
        return {"replicates": 0}
    imses = np.array([r["imse"] for r in records])
    bfs = np.array([r["bf"] for r in records])
    secs = np.array([r["seconds"] for r in records])
    out = {
        "replicates": len(records),
        "imse_mean": float(imses.mean()),
        "imse_se": float(imses.std(ddof=1) / math.sqrt(imses.size))
        if imses.size > 1
        else 0.0,
        "seconds_mean": float(secs.mean()),
    }
    if not np.all(np.isnan(bfs)):
        out["bf_mean"] = float(np.nanmean(bfs))
        out["bf_exceeds_6"] = int(np.sum(bfs > 6))
    return out


def write_summary(summary: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
