import json

import numpy as np
import pytest
from click.testing import CliRunner

from mohardy.cli import main
from mohardy.grid_forms import DiscreteForm, Grid, random_form, write_dff

SMALL_SUITE = {
    "calculus_fields": 2, "smoke": False, "norm_balls": 2, "norm_fields": 2, "pipeline_atoms": 1,
    "nq_decompositions": 2, "nq_trials": 3, "nq_inputs": 1, "case_atoms": 1, "e2e_inputs": 1,
    "l1_trials": 1, "divcurl_pairs": 3, "divcurl_spot": 1, "lemma_balls": 2, "wide_balls": 1,
    "min_pairs": 2, "jn_fixtures": 2, "determinism": False, "criteria": [1, 2, 4, 7, 8],
}


@pytest.fixture
def runner():
    return CliRunner()


def _report(out):
    return json.loads((out / "report.json").read_text())


def test_schema(runner):
    res = runner.invoke(main, ["schema"])
    assert res.exit_code == 0
    doc = json.loads(res.output)
    assert {"grid", "growth", "seed", "suite"} <= set(doc["properties"])


def test_bad_config_reports_path(runner, tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"grid": {"N": 63}}))
    res = runner.invoke(main, ["norm", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert res.exit_code == 2
    assert "config error at grid.N" in res.output
    cfg.write_text(json.dumps({"grid": {"n": 2}, "colour": 1}))
    res = runner.invoke(main, ["suite", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert res.exit_code == 2 and "colour" in res.output
    res = runner.invoke(main, ["suite", "--grid", "2,64", "--out", str(tmp_path / "o")])
    assert res.exit_code == 2


def test_norm_of_zero_field(runner, tmp_path):
    grid = Grid(2, 32, 4.0)
    path = tmp_path / "zero.dff"
    write_dff(path, DiscreteForm.zeros(grid, 1))
    out = tmp_path / "o"
    res = runner.invoke(main, ["norm", str(path), "--grid", "2,32,4", "--out", str(out)])
    assert res.exit_code == 0, res.output
    metrics = _report(out)["metrics"]
    assert metrics["luxembourg"] == metrics["hardy"] == metrics["hlog"] == metrics["h1"] == 0.0
    assert metrics["bmo"]["bmo_plus"] == 0.0
    assert (out / "timings.json").exists()


def test_fixture_command(runner, tmp_path):
    res = runner.invoke(main, ["fixture", "atom", "--param", "degree=1", "--seed", "3", "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["validation"]["passed"] and man["seed"] == 3
    res = runner.invoke(main, ["fixture", "atom", "--param", "degree", "--out", str(tmp_path)])
    assert res.exit_code == 2


def test_decompose_non_closed_input(runner, tmp_path):
    grid = Grid(2, 64, 4.0)
    path = tmp_path / "open.dff"
    write_dff(path, random_form(grid, 1, np.random.default_rng(0)))
    res = runner.invoke(main, ["decompose", str(path), "--out", str(tmp_path / "o")])
    assert res.exit_code == 3
    assert "not closed" in res.output


def test_decompose_generated_input(runner, tmp_path):
    out = tmp_path / "o"
    res = runner.invoke(main, ["decompose", "--seed", "1", "--out", str(out)])
    assert res.exit_code == 0, res.output
    summary = _report(out)["decomposition"]
    assert summary["all_atoms_valid"] and summary["reconstruction_error"] <= 1e-3
    assert (out / "decomposition" / "manifest.json").exists()


def test_divcurl_command(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"divcurl": {"pairs": 3}}))
    out = tmp_path / "o"
    res = runner.invoke(main, ["divcurl", "--config", str(cfg), "--out", str(out)])
    assert res.exit_code == 0, res.output
    rep = _report(out)
    assert len(rep["pairs"]) == 3 and rep["within_bound"]
    assert len((out / "divcurl.csv").read_text().strip().splitlines()) == 4


def test_suite_reports_identical_across_jobs(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 4, "suite": SMALL_SUITE}))
    outs = []
    for jobs in ("1", "2"):
        out = tmp_path / f"jobs{jobs}"
        res = runner.invoke(main, ["suite", "--config", str(cfg), "--jobs", jobs, "--out", str(out)])
        assert res.exit_code == 0, res.output
        assert res.output.count("criterion ") == len(SMALL_SUITE["criteria"])
        outs.append((out / "report.json").read_bytes())
    assert outs[0] == outs[1]
    assert _report(tmp_path / "jobs1")["passed"]
