import json

import numpy as np
import pytest

from kfl import cli, io, space as S


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def value(out, key):
    line = next(l for l in out.splitlines() if l.startswith(key + ":"))
    return line.split(":", 1)[1].strip()


@pytest.fixture
def grid8(tmp_path, capsys):
    path = tmp_path / "g.json"
    assert run(capsys, "space", "build", "grid", "--extent", 0, 7, "--out", path)[0] == 0
    return path


@pytest.fixture
def grid2d(tmp_path, capsys):
    path = tmp_path / "g2.json"
    assert run(capsys, "space", "build", "grid", "--dim", 2, "--extent", -1, 1, "--spacing", 0.1,
               "--out", path)[0] == 0
    return path


# ---------------------------------------------------------------- space

def test_space_build_and_audit(grid8, capsys):
    assert io.read_space(grid8).n == 8
    code, out, _ = run(capsys, "space", "audit", "--space", grid8)
    assert code == 0 and value(out, "doubling_constant") == "3"
    code, capped, _ = run(capsys, "space", "audit", "--space", grid8, "--cap", 1.1)
    assert code == 0
    assert float(value(capped, "doubling_constant")) <= float(value(out, "doubling_constant"))


def test_space_usage_errors(tmp_path, capsys):
    assert run(capsys, "space", "build", "grid")[0] == 2
    assert run(capsys, "space", "audit")[0] == 2
    assert run(capsys, "space", "audit", "--space", tmp_path / "missing.json")[0] == 2
    with pytest.raises(SystemExit):
        cli.main(["space", "explode"])


# ---------------------------------------------------------------- weight

def test_weight_audit_constant(grid8, capsys):
    code, out, _ = run(capsys, "weight", "audit", "--space", grid8)
    assert code == 0 and "RH_2=1," in out and "RH_inf=1," in out and "A_1.5=1" in out


@pytest.fixture
def unit_grid(tmp_path, capsys):
    path = tmp_path / "u.json"
    run(capsys, "space", "build", "grid", "--extent", -1, 1, "--spacing", 0.125, "--out", path)
    return path


@pytest.mark.parametrize("alpha,verdict", [(0.25, "in class"), (0.6, "diverging")])
def test_weight_scan(unit_grid, capsys, alpha, verdict):
    code, out, _ = run(capsys, "weight", "scan", "--space", unit_grid, "--weight", f"power:alpha={alpha}",
                       "--q", 2)
    assert code == 0 and out.strip().endswith(verdict)
    assert sum(l.startswith("level") for l in out.splitlines()) == 6


def test_weight_bad_description(grid8, capsys):
    assert run(capsys, "weight", "audit", "--space", grid8, "--weight", "power:alpha")[0] == 2
    assert run(capsys, "weight", "audit", "--space", grid8, "--weight", "nosuch")[0] == 2


# ---------------------------------------------------------------- czd

def test_czd_high_alpha_identity(grid2d, tmp_path, capsys):
    out_dir = tmp_path / "cz"
    code, out, _ = run(capsys, "czd", "--space", grid2d, "--alpha", 1e9, "--out", out_dir)
    assert code == 0
    assert value(out, "omega_points") == "0" and value(out, "balls") == "0"
    dec = json.loads((out_dir / "decomposition.json").read_text())
    assert dec["balls"] == []
    assert json.loads((out_dir / "report.json").read_text())["reports"][0]["passed"]


def test_czd_standard_instance_passes(grid2d, tmp_path, capsys):
    code, out, _ = run(capsys, "czd", "--space", grid2d, "--weight", "polynomial:coeffs=1;0;1",
                       "--alpha", 5, "--seed", 3)
    assert code == 0 and int(value(out, "balls")) > 0
    assert "PASS" in out


def test_czd_usage(grid2d, capsys):
    assert run(capsys, "czd", "--space", grid2d)[0] == 2
    assert run(capsys, "czd", "--space", grid2d, "--alpha", 1, "--r", 2, "--s", 1)[0] == 2


# ---------------------------------------------------------------- kcurve / interp

def test_kcurve_zero_function(tmp_path, capsys):
    sp = tmp_path / "l.json"
    io.write_space(S.line(3), sp)
    f = tmp_path / "f.json"
    io.write_function(np.zeros(3), f)
    out_csv = tmp_path / "k.csv"
    code, _, _ = run(capsys, "kcurve", "--space", sp, "--function", f, "--points", 5, "--out", out_csv)
    assert code == 0
    rows = io.read_curve_csv(out_csv)
    assert {m for _, _, m in rows} >= {"exact", "lower"}
    assert all(K == 0 for _, K, _ in rows)


def test_kcurve_small_space_exact_and_feasible(tmp_path, capsys):
    sp = tmp_path / "l.json"
    io.write_space(S.line(4), sp)
    f = tmp_path / "f.json"
    io.write_function(np.array([1.0, -0.5, 2.0, 0.25]), f)
    code, out, _ = run(capsys, "kcurve", "--space", sp, "--function", f, "--points", 9)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "t,K,method"
    rows = [l.split(",") for l in lines[1:]]
    exact = [float(r[1]) for r in rows if r[2] == "exact"]
    upper = [float(r[1]) for r in rows if r[2].startswith("cz")]
    assert len(exact) == 9 and np.all(np.diff(exact) >= 0)
    assert all(e <= u * (1 + 1e-11) for e, u in zip(exact, upper))


def test_kcurve_deterministic_across_threads(grid8, capsys, monkeypatch):
    args = ("kcurve", "--space", grid8, "--seed", 5, "--points", 7)
    monkeypatch.delenv("KFL_THREADS", raising=False)
    _, one, _ = run(capsys, *args)
    monkeypatch.setenv("KFL_THREADS", "4")
    _, four, _ = run(capsys, *args)
    assert one == four


def test_interp(grid8, capsys):
    code, out, _ = run(capsys, "interp", "--space", grid8, "--weight", "constant", "--seed", 1)
    assert code == 0 and value(out, "theta") == "0.666666666667"
    assert float(value(out, "interp_norm")) > 0


def test_bad_thread_setting(grid8, capsys, monkeypatch):
    monkeypatch.setenv("KFL_THREADS", "many")
    assert run(capsys, "kcurve", "--space", grid8, "--points", 3)[0] == 2


# ---------------------------------------------------------------- verify

def test_verify_space_file(grid8, tmp_path, capsys):
    assert run(capsys, "verify", "space", "--space", grid8)[0] == 0
    d = io.space_to_dict(io.read_space(grid8))
    d["distance"][0][7] = d["distance"][7][0] = 100.0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(d))
    code, out, _ = run(capsys, "verify", "space", "--space", bad)
    assert code == 1 and "FAIL" in out


def test_verify_tolerance_override_recorded(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "weights", "--tolerance", "rh_growth=1.05", "--out", tmp_path / "r.json")
    assert code == 0
    assert "overrides rh_growth=1.05" in out.splitlines()[-1]
    reports = json.loads((tmp_path / "r.json").read_text())["reports"]
    assert any("rh_growth" in r["notes"] for r in reports)


def test_verify_unknown_tolerance(capsys):
    assert run(capsys, "verify", "space", "--tolerance", "nope=1")[0] == 2
    assert run(capsys, "verify", "space", "--tolerance", "rh_growth")[0] == 2
