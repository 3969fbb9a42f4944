import csv
import json

import numpy as np
import pytest

from pwstab.cli import main, run_report, run_sweep
from pwstab.config import ConfigInvalid, parse_config
from pwstab.profile import compute_period

CUBIC_CFG = {"model": {"family": "KDV", "f": [0, 0, 0, 1]}, "params": {"mu": 0.01, "lambda": [0.0], "c": -1.0},
             "numerics": {"nu_steps": 2}}
HARMONIC_CFG = {"model": {"family": "KDV", "f": [0]}, "params": {"mu": 0.5, "lambda": [0.0], "c": -1.0},
                "numerics": {"nu_steps": 1}}


def write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def read_csv(path):
    raw = open(path, newline="").read()
    assert "\r" not in raw
    rows = list(csv.reader(raw.splitlines()))
    return rows[0], rows[1:]


def test_config_defaults_and_validation():
    cfg = parse_config(CUBIC_CFG)
    assert cfg.numerics["quad_nodes"] == 200 and cfg.numerics["hill_modes"] == 64
    bad = json.loads(json.dumps(CUBIC_CFG))
    bad["params"]["lambda"] = [0.0, 1.0]
    with pytest.raises(ConfigInvalid):
        parse_config(bad)
    bad = json.loads(json.dumps(CUBIC_CFG))
    bad["numerics"]["unknown"] = 1
    with pytest.raises(ConfigInvalid):
        parse_config(bad)
    bad = json.loads(json.dumps(CUBIC_CFG))
    bad["numerics"]["sign_tol"] = -1
    with pytest.raises(ConfigInvalid):
        parse_config(bad)
    with pytest.raises(ConfigInvalid):
        parse_config({"model": {"family": "KDV", "F": [0]}, "params": {"mu": 0, "lambda": [0], "c": 1}})
    with pytest.raises(ConfigInvalid):
        parse_config({"model": {"family": "XYZ", "f": [0]}, "params": {"mu": 0, "c": 1}})


def test_cnoidal_report_is_complete():
    rep, code = run_report(parse_config(CUBIC_CFG))
    assert code == 0 and rep["status"] == "complete"
    assert rep["coperiodic"] == "InconclusiveByDet"
    assert rep["johnson"] == "OrbitallyStable"
    assert rep["modulational"]["verdict"] == "Hyperbolic"
    assert rep["signatures"] == {"neg_C": 1, "neg_A": 1, "neg_constrained": 0, "orbital_by_signature": True}
    assert rep["spectral"]["real_roots"] == []
    assert len(rep["hess"]) == 9 and len(rep["C"]) == 4 and len(rep["S"]) == 9
    assert rep["cross_identity_residual"] < 1e-4


def test_harmonic_report_is_partial():
    rep, code = run_report(parse_config(HARMONIC_CFG))
    assert code == 2
    assert rep["johnson"] == "Degenerate"
    assert rep["coperiodic"] in ("InconclusiveByDet", "UnstableByDet", "Degenerate")
    assert [e["code"] for e in rep["errors"]] == ["DegenerateParametrization"]
    assert len(rep["hess"]) == 9 and "C" not in rep


def test_report_deterministic_except_timestamp(tmp_path):
    path = write(tmp_path, CUBIC_CFG)
    outs = []
    for i in range(2):
        out = tmp_path / f"r{i}.json"
        assert main(["report", "--config", path, "--out", str(out)]) == 0
        rep = json.loads(out.read_text())
        rep["provenance"]["timestamp"] = None
        outs.append(json.dumps(rep))
    assert outs[0] == outs[1]


def test_config_failure_exit_code(tmp_path, capsys):
    bad = json.loads(json.dumps(CUBIC_CFG))
    bad["params"]["lambda"] = [0.0, 0.0]
    assert main(["report", "--config", write(tmp_path, bad)]) == 1
    assert main(["report", "--config", str(tmp_path / "missing.json")]) == 1


def test_profile_csv(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["profile", "--config", write(tmp_path, CUBIC_CFG), "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["x", "v", "vx"]
    assert len(rows) == 256
    assert float(rows[0][1]) == pytest.approx(-0.12635428474099787, rel=1e-14)
    # 17 significant digits
    assert len(rows[1][0].replace("-", "").replace(".", "").split("e")[0].lstrip("0")) >= 16


def test_ekl_profile_csv_has_velocity(tmp_path):
    cfg = {"model": {"family": "EKL", "F": [0, 0, 0, 1]}, "params": {"mu": 0.009, "lambda": [0, 0], "c": 1}}
    out = tmp_path / "p.csv"
    assert main(["profile", "--config", write(tmp_path, cfg), "--out", str(out)]) == 0
    assert read_csv(out)[0] == ["x", "v", "vx", "u"]


def test_evans_and_floquet_csv(tmp_path):
    path = write(tmp_path, CUBIC_CFG)
    out = tmp_path / "e.csv"
    assert main(["evans", "--config", path, "--out", str(out), "--tau-max", "2", "--tau-points", "5",
                 "--nu-steps", "2"]) == 0
    header, rows = read_csv(out)
    assert header == ["tau_re", "tau_im", "nu", "D_re", "D_im"]
    assert len(rows) == 10
    out = tmp_path / "f.csv"
    assert main(["floquet", "--config", path, "--out", str(out), "--nu-steps", "2", "--radius", "0.5"]) == 0
    header, rows = read_csv(out)
    assert header == ["nu", "unstable_count", "contour_radius"]
    assert [r[1] for r in rows] == ["0", "0"]


def test_simulate_csv(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["simulate", "--config", write(tmp_path, CUBIC_CFG), "--out", str(out), "--tmax", "0.5"]) == 0
    header, rows = read_csv(out)
    assert header == ["t", "dist_to_orbit", "dH", "dQ", "dM"]
    assert float(rows[-1][0]) == pytest.approx(0.5)
    assert max(abs(float(r[2])) for r in rows) < 1e-8


def test_sweep_rows_and_monotone_period():
    cfg = parse_config(CUBIC_CFG)
    header, rows = run_sweep(cfg, "mu", 1e-4, 0.012, 50)
    assert len(rows) == 50
    assert header[:5] == ["value", "Xi", "theta", "detSigma", "theta_mumu"]
    Xi = np.array([r[1] for r in rows], dtype=float)
    assert np.all(np.diff(Xi) > 0)
    expected = compute_period(cfg.model, cfg.params.from_vector([rows[0][0], 0.0, -1.0]))
    assert Xi[0] == pytest.approx(expected, rel=1e-12)
    assert all(r[-1] == "ok" for r in rows)


def test_sweep_contains_failures():
    header, rows = run_sweep(parse_config(CUBIC_CFG), "mu", 0.015, 0.03, 4)
    status = [r[-1] for r in rows]
    assert status[0] == "ok"
    assert status[-1] == "NoOrbit"
    assert rows[-1][1] == ""


def test_sweep_validation():
    cfg = parse_config(CUBIC_CFG)
    with pytest.raises(ConfigInvalid):
        run_sweep(cfg, "mu", 0.0, 0.01, 1)
    with pytest.raises(ConfigInvalid):
        run_sweep(cfg, "lambda2", 0.0, 0.01, 3)


def test_sweep_parallel_order(tmp_path):
    path = write(tmp_path, CUBIC_CFG)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sweep", "--config", path, "--vary", "c", "--from", "-1.3", "--to", "-1.0", "--steps", "4"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--jobs", "2"]) == 0
    assert a.read_text() == b.read_text()
