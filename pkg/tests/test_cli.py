import json

import numpy as np
import pytest

from lorcomp import cset
from lorcomp.cli import main


def run(*argv):
    return main([str(a) for a in argv])


def test_generate_and_verify_minkowski(tmp_path, capsys):
    space = tmp_path / "m.cset"
    assert run("generate", "--ambient", "minkowski", "--count", 200, "--seed", 3, "-o", space) == 0
    assert cset.load(space).n == 200
    assert run("verify", space, "--K", 0, "--formulation", "all", "--budget", 20, "--hinge-budget", 4) == 0
    doc = json.loads((tmp_path / "m.report.json").read_text())
    assert doc["format"] == "lorcomp-report v1"
    assert doc["summary"]["passed"]
    assert doc["summary"]["statement"] == "no violation found in the sample"
    assert {v["formulation"] for v in doc["verdicts"]} == {"triangle", "monotonicity", "angle", "hinge"}
    assert "no violation found" in capsys.readouterr().out


def test_verify_cylinder_exit_codes(tmp_path):
    space = tmp_path / "cyl.cset"
    assert run("generate", "--fixture", "cylinder-scenario", "-o", space) == 0
    assert run("verify", space, "--K", 0, "--direction", "above", "--quiet") == 1
    assert run("verify", space, "--K", 0, "--direction", "above", "--locality", "diamonds", "--quiet") == 0


def test_verify_ads_diameter(tmp_path):
    space = tmp_path / "ads.cset"
    assert run("generate", "--ambient", "ads", "--K", -1, "--count", 200, "-o", space) == 0
    csv = tmp_path / "m.csv"
    out = tmp_path / "r.json"
    assert run("verify", space, "--K", -1, "--diameter", "--budget", 20, "--report", out, "--csv", csv, "--quiet") == 0
    doc = json.loads(out.read_text())
    assert doc["diameter"][0]["diameter"] <= np.pi
    assert csv.read_text().startswith("K,")


def test_negative_curvature_lists(tmp_path):
    space = tmp_path / "ads.cset"
    run("generate", "--ambient", "ads", "--count", 150, "-o", space)
    out = tmp_path / "r.json"
    assert run("verify", space, "--K", "-1,-2", "--direction", "above", "--budget", 10, "--report", out, "--quiet") == 0
    assert sorted({v["K"] for v in json.loads(out.read_text())["verdicts"]}) == [-2.0, -1.0]
    assert run("verify", space, "--K", "-0.5", "--direction", "above", "--budget", 10, "--report", out, "--quiet") == 1


def test_json_export(tmp_path):
    space = tmp_path / "d.json"
    assert run("generate", "--fixture", "diamond-poset", "--json", "-o", space) == 0
    assert json.loads(space.read_text())["format"] == "lorcomp-cset-json v1"
    assert run("verify", space, "--K", 0, "--quiet") in (0, 1)


def test_config_file(tmp_path):
    space = tmp_path / "m.cset"
    run("generate", "--count", 100, "-o", space)
    cfg = tmp_path / "c.toml"
    report = tmp_path / "via-config.json"
    cfg.write_text(f'[campaign]\nK = [0.0]\ntriangle_budget = 10\n[output]\nreport = "{report.as_posix()}"\n')
    assert run("verify", space, "--config", cfg, "--quiet") == 0
    assert json.loads(report.read_text())["config"]["campaign"]["triangle_budget"] == 10
    cfg.write_text("[campaign]\nbogus = 1\n")
    assert run("verify", space, "--config", cfg) == 2


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("LORCOMP_SEED", "11")
    a, b = tmp_path / "a.cset", tmp_path / "b.cset"
    run("generate", "--count", 30, "-o", a)
    run("generate", "--count", 30, "--seed", 11, "-o", b)
    assert a.read_text() == b.read_text()
    monkeypatch.setenv("LORCOMP_SEED", "eleven")
    assert run("generate", "--count", 30, "-o", a) == 2


def test_usage_errors(tmp_path, capsys):
    assert run("reproduce", "nope", "--outdir", tmp_path) == 2
    assert run("generate", "--ambient", "ads", "--K", 1, "--count", 5, "-o", tmp_path / "x.cset") == 2
    assert run("generate", "-o", tmp_path / "x.cset") == 2
    assert run("verify", tmp_path / "missing.cset") == 2
    (tmp_path / "bad.cset").write_text("garbage\n")
    assert run("verify", tmp_path / "bad.cset") == 2
    assert "lorcomp: error:" in capsys.readouterr().err
    with pytest.raises(SystemExit) as err:
        run("frobnicate")
    assert err.value.code == 2


def test_reproduce_cylinder(tmp_path, capsys):
    assert run("reproduce", "cylinder", "--outdir", tmp_path) == 0
    doc = json.loads((tmp_path / "cylinder.report.json").read_text())
    pair = doc["fixture_pair"]
    assert pair["tau"] == 0.0 and pair["tau_bar"] > 0.5 and pair["triangle_degenerate"]
    assert doc["global"]["exit_code"] == 1 and doc["local"]["exit_code"] == 0
    assert doc["geodesics_xz"] == 2
    assert (tmp_path / "cylinder.polylines.csv").read_text().startswith("curve,index,t,x")
    space = tmp_path / "cylinder.cset"
    assert run("verify", space, "--K", 0, "--direction", "above", "--quiet") == 1
    assert run("verify", space, "--K", 0, "--direction", "above", "--locality", "diamonds", "--quiet") == 0
    assert "reproduced: True" in capsys.readouterr().out


def test_reproduce_gluing(tmp_path):
    assert run("reproduce", "gluing", "--outdir", tmp_path) == 0
    doc = json.loads((tmp_path / "gluing.report.json").read_text())
    assert set(doc["cases"]) == {"I", "II-xy", "II-yz"}
    assert all(c["gluing_consistent"] for c in doc["cases"].values())


def test_reproduce_bonnet(tmp_path, capsys):
    assert run("reproduce", "bonnet", "--outdir", tmp_path) == 0
    out = capsys.readouterr().out
    assert "reproduced: True" in out
    doc = json.loads((tmp_path / "bonnet.report.json").read_text())
    assert doc["summary"]["reproduced"]


def test_reproduce_is_deterministic(tmp_path):
    from lorcomp.report import strip_runtime

    a, b = tmp_path / "a", tmp_path / "b"
    run("reproduce", "cylinder", "--outdir", a)
    run("reproduce", "cylinder", "--outdir", b)
    ta = (a / "cylinder.report.json").read_text()
    tb = (b / "cylinder.report.json").read_text()
    assert strip_runtime(ta) == strip_runtime(tb)
    assert (a / "cylinder.cset").read_text() == (b / "cylinder.cset").read_text()
