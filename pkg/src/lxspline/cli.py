"""Command-line interface: fit a curve, test shape hypotheses, or run a
named simulation scenario.

Data come in as CSV with an "x,y" header; configuration is a JSON file with
optional "hyperparameters", "chain", and "interval" sections.  Every command
writes its artifacts into the --out directory and exits nonzero with a
structured message on failure.
"""

import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import model as model_mod
from .errors import DomainError, HypothesisError, InsufficientDataError, LxSplineError
from .model import Dataset, Hyperparameters
from .sampler import ChainConfig, run_tempered, write_draws
from .shapes import ShapeHypothesis, shape_report, write_report
from .simulate import named_scenario, run_replicates, summarize, write_records, write_summary

GRID_SIZE = 200


def _fail(message: str) -> None:
    click.echo(json.dumps({"error": message}), err=True)
    sys.exit(1)


def read_xy_csv(path) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header[:2]] != ["x", "y"]:
            raise DomainError(f'{path}: expected header "x,y"')
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise DomainError(f"{path}:{lineno}: expected two columns")
            try:
                xs.append(float(row[0]))
                ys.append(float(row[1]))
            except ValueError as exc:
                raise DomainError(f"{path}:{lineno}: non-numeric value") from exc
    return np.asarray(xs), np.asarray(ys)


def load_config(path):
    """Returns (Hyperparameters, ChainConfig, interval or None)."""
    doc = {}
    if path is not None:
        with open(path) as fh:
            doc = json.load(fh)
    hp = Hyperparameters.from_dict(doc.get("hyperparameters", {}))
    cfg = ChainConfig.from_dict(doc.get("chain", {}))
    interval = doc.get("interval")
    if interval is not None:
        interval = (float(interval[0]), float(interval[1]))
    return hp, cfg, interval


def _load_dataset(data_path, interval, hp):
    xs, ys = read_xy_csv(data_path)
    if xs.size < hp.order + 2:
        raise InsufficientDataError(
            f"need at least {hp.order + 2} rows, got {xs.size}"
        )
    return Dataset.from_xy(xs, ys, interval)


def _run_fit(data_path, config_path, outdir, seed):
    hp, cfg, interval = load_config(config_path)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    data = _load_dataset(data_path, interval, hp)
    draws, diag = run_tempered(data, hp, cfg)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_draws(draws, outdir / "draws.ndjson")
    with open(outdir / "diagnostics.json", "w") as fh:
        json.dump(diag.to_dict(), fh, indent=2)
        fh.write("\n")
    grid = np.linspace(data.interval[0], data.interval[1], GRID_SIZE)
    curves = np.empty((len(draws), GRID_SIZE))
    for i, d in enumerate(draws):
        curves[i] = model_mod.curve_eval(d.model_state(), data, hp, grid)
    with open(outdir / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "mean", "lower", "upper"])
        means = curves.mean(axis=0)
        lower = np.quantile(curves, 0.025, axis=0)
        upper = np.quantile(curves, 0.975, axis=0)
        for g, m, lo, hi in zip(grid, means, lower, upper):
            writer.writerow([f"{g:.10g}", f"{m:.10g}", f"{lo:.10g}", f"{hi:.10g}"])
    return data, hp, cfg, draws, diag


@click.group()
def main():
    """Shape-constrained spline regression with extremum counting."""


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--config", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=None)
def fit(data, config, out, seed):
    """Fit the curve; writes draws.ndjson, diagnostics.json, summary.csv."""
    try:
        _run_fit(data, config, out, seed)
    except (LxSplineError, OSError, json.JSONDecodeError) as exc:
        _fail(str(exc))


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--config", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=None)
@click.option("--hyp1", required=True, help="monotone | non-monotone | has-extrema(F) | JSON signature list")
@click.option("--hyp2", required=True)
def test(data, config, out, seed, hyp1, hyp2):
    """Fit, then compare two shape hypotheses; writes report.json."""
    try:
        _, hp, _, draws, _ = _run_fit(data, config, out, seed)
        h1 = _parse_hyp(hyp1, hp)
        h2 = _parse_hyp(hyp2, hp)
        if h1.signatures & h2.signatures:
            raise HypothesisError("hypotheses overlap")
        report = shape_report(draws, h1, h2, hp)
        write_report(report, Path(out) / "report.json")
        click.echo(json.dumps({"bf": report["bf"], "lower_bound": report["lower_bound"]}))
    except (LxSplineError, OSError, json.JSONDecodeError) as exc:
        _fail(str(exc))


def _parse_hyp(spec: str, hp) -> ShapeHypothesis:
    text = spec.strip()
    if text.startswith("["):
        return ShapeHypothesis.from_spec(json.loads(text), hp.h)
    return ShapeHypothesis.from_spec(text, hp.h)


@main.command()
@click.option("--scenario", "scenario_id", required=True)
@click.option("--config", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=None)
@click.option("--replicates", type=int, default=None)
def simulate(scenario_id, config, out, seed, replicates):
    """Run a named scenario; writes replicates.csv and summary.json."""
    try:
        hp, cfg, _ = load_config(config)
        overrides = {"hp": hp, "chain": cfg}
        if replicates is not None:
            overrides["replicates"] = replicates
        scen = named_scenario(scenario_id, **overrides)
        records = run_replicates(scen, seed=seed)
        outdir = Path(out)
        outdir.mkdir(parents=True, exist_ok=True)
        write_records(records, outdir / "replicates.csv")
        write_summary(summarize(records), outdir / "summary.json")
    except (LxSplineError, OSError, json.JSONDecodeError) as exc:
        _fail(str(exc))


if __name__ == "__main__":
    main()
