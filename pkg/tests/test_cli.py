import json

import pytest
from click.testing import CliRunner

from freewrap.cli import main

LINE = {"beta": 0.3, "sigma": {"atoms": [{"theta": 1.0, "mass": 0.5}], "fourier": {"c0": 0.5}}}
LINE2 = {"beta": -1.0, "sigma": {"fourier": {"c0": 1.0, "cn": [[0.1, 0.2]]}}}
CIRC = {"gamma_angle": 0.4, "sigma": {"atoms": [{"theta": 0.0, "mass": 0.5}]}}
CIRC2 = {"gamma": [1, 0], "sigma": {"fourier": {"c0": 0.7}}}
PAIR = {"alpha": 0.2, "tau": {"atoms": [{"x": 0, "w": 0.5}, {"x": 1, "w": 0.25}]}}


@pytest.fixture
def files(tmp_path):
    out = {}
    for name, obj in (("a", LINE), ("b", LINE2), ("c", CIRC), ("d", CIRC2), ("p", PAIR)):
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(obj))
        out[name] = str(path)
    out["dir"] = tmp_path
    return out


def run(args, **kw):
    res = CliRunner().invoke(main, args, catch_exceptions=False, **kw)
    return res


def test_wrap_and_unwrap_round_trip(files, tmp_path):
    res = run(["wrap", "--descriptor", files["b"], "--direct", "--window", "16"])
    assert res.exit_code == 0, res.output
    data = json.loads(res.output)
    assert data["direct_sup_difference"] < 1e-4
    (tmp_path / "w.json").write_text(json.dumps(data["descriptor"]))
    res = run(["unwrap", "--branch", "0", str(tmp_path / "w.json")])
    assert json.loads(res.output)["descriptor"]["beta"] == pytest.approx(-1.0, abs=1e-14)


@pytest.mark.parametrize("op", ["boolean", "free", "monotone"])
@pytest.mark.parametrize("domain", ["line", "circle"])
def test_convolve_writes_profile(files, op, domain):
    a, b = (files["a"], files["b"]) if domain == "line" else (files["c"], files["d"])
    out = files["dir"] / f"{op}-{domain}.csv"
    res = run(["convolve", "--op", op, "--domain", domain, a, b, "--out", str(out), "--points", "401"])
    assert res.exit_code == 0, res.output
    assert out.exists() and (out.parent / (out.name + ".json")).exists()
    assert 0.5 < json.loads(res.output)["captured_mass"] <= 1.001


def test_power_and_flow(files):
    res = run(["power", "--t", "0.5", "--branch", "1", files["c"]])
    assert res.exit_code == 0
    g = json.loads(res.output)["descriptor"]["gamma"]
    assert g[0] == pytest.approx(-0.98006657784, abs=1e-10)
    assert run(["power", "--op", "free", "--t", "2", files["c"], "--points", "128"]).exit_code == 0
    assert run(["bn", "--t", "0.5", files["c"], "--points", "128"]).exit_code == 0


def test_env_var_redirects_outputs(files, tmp_path):
    env_dir = tmp_path / "envout"
    res = run(["bn", "--t", "0.5", files["c"], "--out", "bn.csv", "--points", "64"],
              env={"FREEWRAP_OUT": str(env_dir)})
    assert res.exit_code == 0
    assert (env_dir / "bn.csv").exists()


@pytest.mark.parametrize("kind", ["boolean", "free", "monotone", "classical"])
def test_levy_build(files, kind):
    res = run(["levy", "build", "--kind", kind, "--domain", "line", files["p"], "--points", "201"])
    assert res.exit_code == 0, res.output
    res = run(["levy", "build", "--kind", kind, "--domain", "circle", files["d"], "--points", "128"])
    assert res.exit_code == 0, res.output


def test_levy_bp_map_and_burgers(files):
    data = json.loads(run(["levy", "bp-map", files["p"]]).output)
    assert "beta_error" in data and len(data["sigma"]["atoms"]) == 2
    data = json.loads(run(["levy", "burgers", "--t", "0.5", "--grid", "3"]).output)
    assert data["observed_order"] == pytest.approx(2.0, abs=0.1)


def test_verify_exit_codes(tmp_path):
    res = run(["verify", "--only", "measures", "--out", str(tmp_path)])
    assert res.exit_code == 0 and (tmp_path / "report.json").exists()
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"tolerances": {"measures.mass_additive_homogeneous": 1e-16}}))
    res = run(["verify", "--config", str(cfg), "--only", "measures", "--out", str(tmp_path)])
    assert res.exit_code == 1 and "FAIL measures.mass_additive_homogeneous" in res.output


def test_errors_exit_with_one(files, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"beta": "x"}))
    assert run(["wrap", "--descriptor", str(bad)]).exit_code == 1
    assert run(["unwrap", str(tmp_path / "missing.json")]).exit_code == 1
    assert run(["convolve", "--op", "nope", "--domain", "line"]).exit_code == 1
