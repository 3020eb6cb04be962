import json
from dataclasses import replace

import numpy as np
import pytest

from mincontrast.cli import main, parse_grid
from mincontrast.errors import ValidationError
from mincontrast.geometry import PointPattern, RectWindow
from mincontrast.io import drop_timing, read_json, write_json, write_pattern
from mincontrast.lgcp import M1
from mincontrast.simulator import SimConfig, sample_lgcp

TRUTH = replace(M1, b=-1, mu1=2.0, mu2=2.0)
FAST = {"c": 0.5, "R": 1.25, "n0": 64, "b": -1, "window": [-5, 5, -5, 5]}


@pytest.fixture
def files(tmp_path):
    write_json(tmp_path / "model.json", TRUTH.to_dict())
    write_json(tmp_path / "fast.json", FAST)
    pat = sample_lgcp(SimConfig(TRUTH, RectWindow(-5, 5, -5, 5), 64, seed=3))
    write_pattern(tmp_path / "pat.csv", pat)
    return tmp_path


def test_parse_grid():
    assert parse_grid("0.1:0.5:0.1") == [0.1, 0.2, 0.3, 0.4, 0.5]
    assert len(parse_grid("0.5:5:0.25")) == 19
    assert parse_grid("50,100") == [50.0, 100.0]
    with pytest.raises(ValidationError):
        parse_grid("1:0:0.1")


def test_simulate(files):
    out = files / "sim"
    assert main(["simulate", "--config", str(files / "model.json"), "--seed", "7",
                 "--replicates", "3", "--resolution", "32", "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["manifest.json", "pattern_0.csv",
                                                     "pattern_1.csv", "pattern_2.csv"]
    man = read_json(out / "manifest.json")
    assert man["manifest"]["seed"] == 7 and len(man["counts"]) == 3


def test_simulate_zero_replicates(files):
    out = files / "sim0"
    assert main(["simulate", "--config", str(files / "model.json"), "--replicates", "0",
                 "--out", str(out)]) == 0
    assert [p.name for p in out.iterdir()] == ["manifest.json"]


def test_simulate_bad_sigma(files, capsys):
    write_json(files / "bad.json", {**TRUTH.to_dict(), "sigma2": 0.0})
    assert main(["simulate", "--config", str(files / "bad.json"), "--out", str(files / "x")]) == 2
    assert "sigma2" in capsys.readouterr().err


def test_simulate_missing_key(files):
    write_json(files / "bad.json", {"sigma1": 1.0})
    assert main(["simulate", "--config", str(files / "bad.json"), "--out", str(files / "x")]) == 2


def test_fit_defaults_converge(files):
    assert main(["fit", "--pattern", str(files / "pat.csv"), "--window", "-5", "5", "-5", "5",
                 "--out", str(files / "fit.json")]) == 0
    res = read_json(files / "fit.json")
    assert res["converged"] and res["config"]["n0"] == 512
    assert res["config"]["correction"] == "isotropic" and res["config"]["family"] == "K"


def test_fit_single_type(files, capsys):
    (files / "one.csv").write_text("x,y,mark\n1,1,1\n2,2,1\n")
    assert main(["fit", "--pattern", str(files / "one.csv"), "--out", str(files / "f.json")]) == 2
    assert "m=2 required" in capsys.readouterr().err


def test_fit_missing_file(files):
    assert main(["fit", "--pattern", str(files / "nope.csv"), "--out", str(files / "f.json")]) == 1


def test_kfun(files):
    assert main(["kfun", "--pattern", str(files / "pat.csv"), "--config", str(files / "fast.json"),
                 "--out", str(files / "k.csv")]) == 0
    text = (files / "k.csv").read_text()
    assert "h,i,j,khat" in text and text.count("\n") > 64 * 4


def stage_outputs(d):
    """Run fit -> varest -> select into directory d; return parsed outputs."""
    d.mkdir()
    cfg, pat = str(d.parent / "fast.json"), str(d.parent / "pat.csv")
    assert main(["fit", "--pattern", pat, "--config", cfg, "--out", str(d / "fit.json")]) == 0
    assert main(["varest", "--fit", str(d / "fit.json"), "--nsim", "8", "--resolution", "32",
                 "--seed", "3", "--out", str(d / "var.json")]) == 0
    assert main(["select", "--model", str(d.parent / "model.json"), "--config", cfg,
                 "--c-grid", "0.3:0.5:0.2", "--r-grid", "1:1.5:0.5", "--nsim", "8",
                 "--resolution", "32", "--seed", "4", "--out", str(d / "sel.json")]) == 0
    return {f: drop_timing(read_json(d / f)) for f in ("fit.json", "var.json", "sel.json")}


def test_stages_deterministic(files):
    a = stage_outputs(files / "a")
    b = stage_outputs(files / "b")
    for key in a:
        ta = json.dumps(a[key], sort_keys=True).replace(str(files / "a"), "<dir>")
        tb = json.dumps(b[key], sort_keys=True).replace(str(files / "b"), "<dir>")
        assert ta == tb


def test_pipeline_injected_theta_table(files, capsys):
    # Nigeria-scale synthetic replica in km with the reported estimates injected
    rng = np.random.default_rng(0)
    win = RectWindow(0, 1347, 0, 1088)
    pts = [np.column_stack([rng.uniform(0, 1347, n), rng.uniform(0, 1088, n)]) for n in (150, 120)]
    write_pattern(files / "ng.csv", PointPattern.from_types(pts, win))
    write_json(files / "theta.json", {"sigma1": 1.27, "phi1": 66.38, "sigma2": 1.93,
                                      "phi2": 12.91, "sigma3": 1.33, "phi3": 360.42, "b": -1})
    write_json(files / "ng.json", {"n0": 64, "b": -1, "window": win.as_list()})
    out = files / "report.json"
    assert main(["pipeline", "--pattern", str(files / "ng.csv"), "--config", str(files / "ng.json"),
                 "--skip-select", "--c", "0.1", "--R", "420", "--theta", str(files / "theta.json"),
                 "--distances", "50,100,250,420", "--nsim", "8", "--resolution", "32",
                 "--no-refit", "--out", str(out)]) == 0
    rep = read_json(out)
    assert (rep["c"], rep["R"]) == (0.1, 420)
    corr = rep["report"]["correlations"]
    np.testing.assert_allclose(corr["corr11"], [0.68, 0.50, 0.27, 0.16], atol=0.01)
    np.testing.assert_allclose(corr["corr22"], [0.29, 0.24, 0.16, 0.10], atol=0.01)
    np.testing.assert_allclose(corr["corr12"], [-0.36, -0.31, -0.20, -0.13], atol=0.01)
    assert [r["param"] for r in rep["report"]["rows"]] == ["sigma1", "phi1", "sigma2", "phi2",
                                                           "sigma3", "phi3", "rho"]
    table = out.with_suffix(".txt").read_text()
    assert "95% asymptotic CI" in table and "corr12" in table


def test_pipeline_skip_select_requires_cr(files, capsys):
    assert main(["pipeline", "--pattern", str(files / "pat.csv"), "--config", str(files / "fast.json"),
                 "--skip-select", "--out", str(files / "r.json")]) == 2
    assert "select" in capsys.readouterr().err
