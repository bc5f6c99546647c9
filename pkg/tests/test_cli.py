from __future__ import annotations

import csv
import json
import math

import numpy as np
import pytest

from systolic.cli import RunManifest, main, parse_grid
from systolic.geometry import Profile, SurfaceSpec, write_profile_csv
from systolic.optimal import BETA0, BETA1, klein_optimal
from systolic.verify import VerifyConfig, check_defects, equality_failures


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_constants(capsys):
    code, out, _ = run(capsys, "constants", "--json")
    assert code == 0
    d = json.loads(out)
    assert d["alpha_klein"] == pytest.approx(0.900316316157106, abs=1e-15)
    assert d["beta0"] == pytest.approx(math.log(1 + math.sqrt(2)), abs=1e-14)
    assert d["alpha_torus"] == pytest.approx(math.sqrt(3) / 2, abs=1e-14)
    code, out, _ = run(capsys, "constants")
    assert "0.900316316157106" in out


def test_alpha_curve_klein_minimum(capsys, tmp_path):
    out = tmp_path / "a.csv"
    code, _, _ = run(capsys, "alpha-curve", "--beta-min", "0.8", "--beta-max", "1.0",
                     "--step", "0.01", "--out", str(out))
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["beta", "case", "s_beta", "sys", "area", "alpha_sys"]
    best = min(rows, key=lambda r: float(r["alpha_sys"]))
    assert float(best["beta"]) == pytest.approx(BETA0, abs=1e-15)
    assert float(best["alpha_sys"]) == pytest.approx(2 * math.sqrt(2) / math.pi, abs=1e-12)


def test_alpha_curve_endpoints(capsys):
    _, out, _ = run(capsys, "alpha-curve", "--surface", "mobius", "--beta-min", "0.1",
                    "--beta-max", "0.1005", "--step", "0.001")
    row = list(csv.DictReader(out.splitlines()))[0]
    assert float(row["alpha_sys"]) == pytest.approx(2 / math.pi * math.tanh(0.1), abs=1e-15)
    _, out, _ = run(capsys, "alpha-curve", "--beta-min", "2.9995", "--beta-max", "3.0",
                    "--step", "0.0005")
    row = list(csv.DictReader(out.splitlines()))[-1]
    assert float(row["beta"]) == pytest.approx(3.0)
    assert float(row["alpha_sys"]) == pytest.approx(2 * math.sqrt(3) / math.pi
                                                    + (3 - BETA1) / math.pi, abs=1e-12)


def test_alpha_curve_is_byte_stable(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        run(capsys, "alpha-curve", "--beta-min", "0.5", "--beta-max", "1.5", "--step", "0.01",
            "--out", str(p))
    assert a.read_bytes() == b.read_bytes()


def test_alpha_curve_bad_range(capsys):
    code, _, err = run(capsys, "alpha-curve", "--beta-min", "2", "--beta-max", "1")
    assert code == 2
    with pytest.raises(SystemExit) as exc:
        main(["alpha-curve", "--step", "-1"])
    assert exc.value.code == 2


def test_parse_grid():
    assert parse_grid("64x32") == (64, 32)
    with pytest.raises(Exception):
        parse_grid("64")


def test_defect_optimal_file(capsys, tmp_path):
    path = tmp_path / "opt.csv"
    write_profile_csv(path, klein_optimal(1.0), n=4097)
    code, out, _ = run(capsys, "defect", "--beta", "1.0", "--profile", str(path),
                       "--grid", "128x128")
    assert code == 0
    d = json.loads(out)
    assert abs(d["report"]["lhs_defect"]) < 1e-6
    assert abs(d["report"]["rhs_defect"]) < 1e-6
    assert d["manifest"]["command"] == "defect"


def test_defect_flat_thin_klein(capsys, tmp_path):
    path = tmp_path / "flat.csv"
    write_profile_csv(path, Profile.flat(0.3), n=33)
    _, out, _ = run(capsys, "defect", "--beta", "0.3", "--profile", str(path), "--grid", "64x64")
    r = json.loads(out)["report"]
    # the flat metric is optimal when beta <= pi/4
    assert r["alpha_g"] == pytest.approx(math.pi / (4 * 0.3), rel=1e-9)
    assert r["alpha_conformal_opt"] == pytest.approx(math.pi / (4 * 0.3), rel=1e-12)


def test_defect_perturbed(capsys, tmp_path):
    path = tmp_path / "p.csv"
    opt = klein_optimal(1.0)
    write_profile_csv(path, Profile.expression(1.0, lambda y: opt(y) * (1 + 0.1 * np.cos(3 * y)),
                                               "p"), n=513)
    _, out, _ = run(capsys, "defect", "--beta", "1.0", "--profile", str(path), "--grid", "128x128")
    d = json.loads(out)
    assert d["report"]["lhs_defect"] <= d["report"]["rhs_defect"] + d["budget"]


def test_defect_malformed_csv(capsys, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("y,phi\n0,1\n0.5,1\n0.7,0\n1,1\n")
    code, _, err = run(capsys, "defect", "--beta", "1.0", "--profile", str(path))
    assert code == 2
    assert "row 4" in err


def test_verify_subset_and_manifest(capsys, tmp_path):
    out = tmp_path / "v.json"
    code, _, err = run(capsys, "verify", "--checks", "1,2,3,4", "--out", str(out))
    assert code == 0
    d = json.loads(out.read_text())
    assert d["passed"] and len(d["checks"]) == 4
    assert "[PASS]" in err
    m = RunManifest(**d["manifest"])
    assert RunManifest.from_json(m.to_json()) == m
    assert m.parameters["seed"] == 0


def test_verify_coarse_grid_relaxed_tolerance(capsys):
    code, out, _ = run(capsys, "verify", "--checks", "5,6", "--grid", "64x64", "--tol", "0.05")
    assert code == 0
    assert json.loads(out)["passed"]


def test_verify_user_profile(capsys, tmp_path):
    path = tmp_path / "p.csv"
    opt = klein_optimal(0.85)
    write_profile_csv(path, Profile.expression(0.85, lambda y: opt(y) * (1.2 - 0.2 * y), "p"),
                      n=257)
    code, out, _ = run(capsys, "verify", "--checks", "1", "--beta", "0.85", "--profile", str(path),
                       "--grid", "128x128")
    d = json.loads(out)
    assert code == 0
    assert d["checks"][-1]["detail"]["violated"] == []


def test_corrupted_equality_fixture_names_invariant():
    cfg = VerifyConfig(grid=(64, 64))
    s = SurfaceSpec.klein(1.0)
    opt = klein_optimal(1.0)
    corrupted = Profile.expression(1.0, lambda y: opt(y) * (1 + 0.2 * y), "corrupted")
    res = check_defects(cfg, [], equality_profiles=[(s, corrupted)])
    assert not res.passed
    assert any("rhs_defect" in v or "lhs_defect" in v for v in res.detail["violated"])
    assert equality_failures(cfg, [(s, opt)])["violations"] == []


def test_export_curves(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("SYSTOLIC_OUT_DIR", str(tmp_path))
    code, out, _ = run(capsys, "export-curves", "--beta", "1.0", "--taus", "0,0.5,0.9",
                       "--resolution", "129")
    assert code == 0
    rows = list(csv.DictReader((tmp_path / "pu_curves.csv").open()))
    assert len(rows) == 3
    for r in rows:
        assert float(r["g0_length"]) == pytest.approx(math.pi, abs=1e-4)
        assert float(r["endpoint_sum_norm"]) < 1e-9
    strip = (tmp_path / rows[0]["strip_file"]).read_text().splitlines()
    assert strip[0].startswith("# word k=1 m=0")
    # straight gamma_0
    ys = [float(line.split(",")[1]) for line in strip[2:]]
    assert max(abs(y) for y in ys) == 0.0
    assert (tmp_path / rows[1]["sphere_file"]).read_text().startswith("X,Y,Z")


def test_export_curves_domain_error(capsys, tmp_path):
    code, _, err = run(capsys, "export-curves", "--beta", "1.0", "--taus", "1.2",
                       "--out-dir", str(tmp_path))
    assert code == 2


def test_out_dir_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("SYSTOLIC_OUT_DIR", str(tmp_path))
    run(capsys, "constants", "--out", "c.txt")
    assert (tmp_path / "c.txt").read_text().startswith("beta0")
