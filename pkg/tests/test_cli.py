"""End-to-end tests of the command-line interface."""

import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from lxspline.cli import main, read_xy_csv

TINY_CONFIG = {
    "chain": {"n_iters": 300, "burn_in": 100, "temperatures": [0.5, 1.0]},
}


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def data_csv(tmp_path):
    rng = np.random.default_rng(0)
    xs = np.linspace(0, 1, 25)
    ys = 10 * (xs - 0.5) ** 2 + rng.normal(0, 0.5, xs.size)
    path = tmp_path / "data.csv"
    with open(path, "w") as fh:
        fh.write("x,y\n")
        for x, y in zip(xs, ys):
            fh.write(f"{x},{y}\n")
    return path


@pytest.fixture()
def config_json(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(TINY_CONFIG))
    return path


def stderr_error(result) -> str:
    return json.loads(result.stderr.strip().splitlines()[-1])["error"]


class TestReadCsv:
    def test_reads_values(self, data_csv):
        xs, ys = read_xy_csv(data_csv)
        assert xs.size == ys.size == 25

    def test_line_number_in_parse_error(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x,y\n0.1,1.0\n0.2,oops\n")
        with pytest.raises(Exception, match=":3"):
            read_xy_csv(path)


class TestFit:
    def test_artifacts(self, runner, data_csv, config_json, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(main, [
            "fit", "--data", str(data_csv), "--config", str(config_json),
            "--out", str(out), "--seed", "3",
        ])
        assert result.exit_code == 0, result.output + str(result.exception)
        assert (out / "draws.ndjson").exists()
        assert (out / "diagnostics.json").exists()
        with open(out / "summary.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 200
        for row in rows:
            lo, mean, hi = (float(row[k]) for k in ("lower", "mean", "upper"))
            assert lo <= mean <= hi
        diag = json.loads((out / "diagnostics.json").read_text())
        assert "acceptance_rates" in diag and "rj_failures" in diag

    def test_rerun_byte_identical(self, runner, data_csv, config_json, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            result = runner.invoke(main, [
                "fit", "--data", str(data_csv), "--config", str(config_json),
                "--out", str(out), "--seed", "7",
            ])
            assert result.exit_code == 0
            outs.append((out / "draws.ndjson").read_bytes())
        assert outs[0] == outs[1]

    def test_malformed_row_fails_with_line_number(self, runner, tmp_path,
                                                  config_json):
        path = tmp_path / "bad.csv"
        path.write_text("x,y\n0.1,1.0\n0.5\n0.9,2.0\n")
        result = runner.invoke(main, [
            "fit", "--data", str(path), "--config", str(config_json),
            "--out", str(tmp_path / "out"),
        ])
        assert result.exit_code == 1
        assert ":3" in stderr_error(result)

    def test_bad_header(self, runner, tmp_path, config_json):
        path = tmp_path / "bad.csv"
        path.write_text("u,v\n0.1,1.0\n")
        result = runner.invoke(main, [
            "fit", "--data", str(path), "--config", str(config_json),
            "--out", str(tmp_path / "out"),
        ])
        assert result.exit_code == 1
        assert 'header "x,y"' in stderr_error(result)

    def test_empty_csv_insufficient(self, runner, tmp_path, config_json):
        path = tmp_path / "empty.csv"
        path.write_text("x,y\n")
        result = runner.invoke(main, [
            "fit", "--data", str(path), "--config", str(config_json),
            "--out", str(tmp_path / "out"),
        ])
        assert result.exit_code == 1
        assert "rows" in stderr_error(result)

    def test_invalid_config_json(self, runner, data_csv, tmp_path):
        cfg = tmp_path / "broken.json"
        cfg.write_text("{not json")
        result = runner.invoke(main, [
            "fit", "--data", str(data_csv), "--config", str(cfg),
            "--out", str(tmp_path / "out"),
        ])
        assert result.exit_code == 1


class TestHypothesisTest:
    def test_report_written(self, runner, data_csv, config_json, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(main, [
            "test", "--data", str(data_csv), "--config", str(config_json),
            "--out", str(out), "--seed", "1",
            "--hyp1", "has-extrema(1)", "--hyp2", "monotone",
        ])
        assert result.exit_code == 0, result.output + str(result.exception)
        echoed = json.loads(result.output.strip().splitlines()[-1])
        report = json.loads((out / "report.json").read_text())
        assert echoed["bf"] == report["bf"]
        assert report["counts"]["total"] == 200
        assert report["labels"] == {"hyp1": "has-extrema(1)", "hyp2": "monotone"}

    def test_signature_list_hypothesis(self, runner, data_csv, config_json,
                                       tmp_path):
        result = runner.invoke(main, [
            "test", "--data", str(data_csv), "--config", str(config_json),
            "--out", str(tmp_path / "out"), "--seed", "2",
            "--hyp1", "[[0, 1, 1], [1, 1, 0]]", "--hyp2", "monotone",
        ])
        assert result.exit_code == 0, result.output + str(result.exception)

    def test_overlapping_hypotheses_rejected(self, runner, data_csv,
                                             config_json, tmp_path):
        result = runner.invoke(main, [
            "test", "--data", str(data_csv), "--config", str(config_json),
            "--out", str(tmp_path / "out"),
            "--hyp1", "monotone", "--hyp2", "monotone",
        ])
        assert result.exit_code == 1
        assert "overlap" in stderr_error(result)

    def test_unparseable_hypothesis(self, runner, data_csv, config_json,
                                    tmp_path):
        result = runner.invoke(main, [
            "test", "--data", str(data_csv), "--config", str(config_json),
            "--out", str(tmp_path / "out"),
            "--hyp1", "wiggly", "--hyp2", "monotone",
        ])
        assert result.exit_code == 1


class TestSimulate:
    def test_scenario_run(self, runner, config_json, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(main, [
            "simulate", "--scenario", "f4-lownoise", "--config",
            str(config_json), "--out", str(out), "--seed", "5",
            "--replicates", "2",
        ])
        assert result.exit_code == 0, result.output + str(result.exception)
        with open(out / "replicates.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2
        summary = json.loads((out / "summary.json").read_text())
        assert summary["replicates"] == 2
        assert summary["imse_mean"] == pytest.approx(
            np.mean([float(r["imse"]) for r in rows])
        )

    def test_unknown_scenario(self, runner, tmp_path):
        result = runner.invoke(main, [
            "simulate", "--scenario", "mystery", "--out", str(tmp_path / "o"),
        ])
        assert result.exit_code == 1
        assert "unknown scenario" in stderr_error(result)
