import json
import math
import subprocess
import sys

import pytest

from reskit.cli import EXIT_CONFIG, EXIT_OK, EXIT_PRECONDITION, EXIT_RANGE, dumps, fmt, run
from reskit.pendulum import pendulum_omega


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg, indent=2), encoding="utf-8")
    return p


def ok(command, tmp_path, cfg, out="out"):
    code, rep = run(command, write(tmp_path, cfg), tmp_path / out)
    assert code == EXIT_OK, rep
    return rep


def synthetic(**over):
    cfg = {"system": "averaged-model", "params": {"n": 3, "b1": -0.5, "mu": 0.1},
           "series": {"A_tilde": {"sin": [1.0]}}}
    cfg["params"].update(over)
    return cfg


def test_number_format():
    assert fmt(0.1) == "0.10000000000000001"
    assert float(fmt(1 / 3)) == 1 / 3
    assert json.loads(dumps({"a": math.nan, "b": [1.5, True, None]})) == {"a": None, "b": [1.5, True, None]}


def test_genfun_at_bifurcation(tmp_path):
    rep = ok("genfun", tmp_path, {"system": "pendulum-q2", "params": {"p1": -8.481}, "options": {"k_count": 50}})
    assert rep["double_root"]["k"] == pytest.approx(0.759, abs=1e-3)
    lines = (tmp_path / "out" / "genfun.csv").read_text().splitlines()
    assert lines[0] == "k,I,B0,B1,B2" and len(lines) == 51


def test_genfun_without_roots(tmp_path):
    rep = ok("genfun", tmp_path, {"system": "pendulum-q2", "params": {"p1": 0.0}})
    assert rep["roots"] == [] and rep["double_root"] is None


def test_genfun_two_cycles(tmp_path):
    rep = ok("genfun", tmp_path, {"system": "pendulum-q2", "params": {"p1": -9.0}})
    assert sorted(r["cycle"] for r in rep["roots"]) == ["stable", "unstable"]


def test_resonance_defaults(tmp_path):
    rep = ok("resonance", tmp_path, {"system": "pendulum-q2", "preset": "bifurcation"})
    assert rep["k_res"] == pytest.approx(0.759, abs=1e-3)
    assert rep["coincidence"] is True


def test_resonance_trivial_index(tmp_path):
    cfg = {"system": "pendulum-q2", "params": {"omega1": pendulum_omega(0.5), "omega2": 1.4},
           "options": {"n": 1, "m1": 1, "m2": 0}}
    assert ok("resonance", tmp_path, cfg)["k_res"] == pytest.approx(0.5, abs=1e-10)


def test_resonance_out_of_range(tmp_path):
    cfg = {"system": "pendulum-q2", "params": {"omega1": 1.0, "omega2": 10.0}}
    code, msg = run("resonance", write(tmp_path, cfg), tmp_path)
    assert code == EXIT_RANGE and "outside omega range" in msg


def test_missing_key(tmp_path):
    cfg = {"system": "pendulum-q2", "params": {"p2": 0.0}}
    code, msg = run("genfun", write(tmp_path, cfg), tmp_path)
    assert code == EXIT_CONFIG
    assert "missing parameter key 'p1' in 'params'" in msg


def test_bad_value_names_line(tmp_path):
    p = write(tmp_path, {"system": "pendulum-q2", "params": {"p1": "x"}})
    code, msg = run("genfun", p, tmp_path)
    assert code == EXIT_CONFIG and f"{p}:4: key 'p1'" in msg


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"system": "pendulum-q2",\n "params": {,}}', encoding="utf-8")
    code, msg = run("genfun", p, tmp_path)
    assert code == EXIT_CONFIG and f"{p}:2:" in msg


def test_unknown_system_and_preset(tmp_path):
    assert run("genfun", write(tmp_path, {"system": "duffing"}), tmp_path)[0] == EXIT_CONFIG
    assert run("genfun", write(tmp_path, {"system": "pendulum-q2", "preset": "x"}), tmp_path)[0] == EXIT_CONFIG


def test_thread_override_validated(tmp_path, monkeypatch):
    monkeypatch.setenv("RESKIT_THREADS", "zero")
    cfg = {"system": "pendulum-q2", "preset": "fig1b", "options": {"scan_grid": [2, 2]}}
    code, msg = run("portrait", write(tmp_path, cfg), tmp_path)
    assert code == EXIT_CONFIG and "RESKIT_THREADS" in msg


def test_melnikov_zero_m_n(tmp_path):
    rep = ok("melnikov", tmp_path, synthetic())
    assert rep["delta1"] == 0.0
    assert rep["classification"] == "double_loop_bifurcation"


def test_melnikov_constant_b2(tmp_path):
    rep = ok("melnikov", tmp_path, synthetic(B2=0.3))
    assert rep["delta1"] == pytest.approx(-4 * math.pi * 0.3 / (9 * -0.5), rel=1e-12)
    assert rep["shooting"]["sign_agrees"] is True


def test_melnikov_pendulum_sign(tmp_path):
    rep = ok("melnikov", tmp_path, {"system": "pendulum-q2", "preset": "fig1a"})
    assert rep["shooting"]["sign_agrees"] is True


def test_melnikov_preconditions(tmp_path):
    code, _ = run("melnikov", write(tmp_path, synthetic(gamma1=0.1)), tmp_path)
    assert code == EXIT_PRECONDITION
    cfg = synthetic()
    cfg["series"]["sigma_tilde"] = {"cos": [0.2]}
    assert run("melnikov", write(tmp_path, cfg), tmp_path)[0] == EXIT_PRECONDITION
    cfg = synthetic()
    cfg["series"] = {}
    assert run("melnikov", write(tmp_path, cfg), tmp_path)[0] == EXIT_PRECONDITION
    asym = {"system": "pendulum-q2", "preset": "fig4"}
    assert run("melnikov", write(tmp_path, asym), tmp_path)[0] == EXIT_PRECONDITION


def test_simulate_unperturbed(tmp_path):
    cfg = {"system": "pendulum-q2", "preset": "bifurcation",
           "options": {"T": 1000.0, "epsilon_full": 0.0, "rtol": 1e-12, "atol": 1e-12,
                       "start": {"equilibrium": "stable", "u_offset": 1.0}}}
    rep = ok("simulate", tmp_path, cfg)
    assert rep["max_abs_I_minus_I0"] < 1e-8
    head = (tmp_path / "out" / "trajectory.csv").read_text().splitlines()[0]
    assert head == "t,x,y,I,v"


def test_simulate_start_outside_cell(tmp_path):
    cfg = {"system": "pendulum-q2", "preset": "bifurcation", "options": {"start": {"x": 0.0, "y": 3.0}}}
    assert run("simulate", write(tmp_path, cfg), tmp_path)[0] == EXIT_RANGE


def test_portrait_outputs_and_determinism(tmp_path):
    cfg = {"system": "pendulum-q2", "preset": "fig1a", "seed": 5,
           "options": {"scan_grid": [4, 4], "horizon": 30.0, "samples": 11}}
    rep = ok("portrait", tmp_path, cfg, "a")
    ok("portrait", tmp_path, cfg, "b")
    assert rep["figure"] == "1a"
    for name in ("portrait.json", "separatrices.csv", "cycles.csv", "trajectories.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    heads = {n: (tmp_path / "a" / n).read_text().splitlines()[0] for n in
             ("separatrices.csv", "cycles.csv", "trajectories.csv")}
    assert heads == {"separatrices.csv": "curve,manifold,direction,point,v,u",
                     "cycles.csv": "cycle,location,stable,point,v,u",
                     "trajectories.csv": "trajectory,escaped,point,t,v,u"}


def test_portrait_closed_loops(tmp_path):
    rep = ok("portrait", tmp_path, {"system": "pendulum-q2", "preset": "fig1b"})
    assert rep["figure"] == "1b" and rep["taxonomy"] == "impassable"


def test_sweep(tmp_path):
    cfg = {"system": "pendulum-q2", "preset": "fig2a", "workers": 2,
           "options": {"parameter": "B2_override", "values": [3e-5, 1.0], "scan_grid": [6, 6],
                       "find_cycles": False}}
    rep = ok("sweep", tmp_path, cfg)
    assert rep["taxonomies"] == ["impassable", "partly_passable"]
    head = (tmp_path / "out" / "sweep.csv").read_text().splitlines()[0]
    assert head.startswith("index,value,taxonomy,figure,family,equilibria")


def test_main_exit_codes(tmp_path):
    p = write(tmp_path, {"system": "pendulum-q2", "params": {"omega1": 1.0, "omega2": 10.0}})
    res = subprocess.run([sys.executable, "-m", "reskit.cli", "resonance", "--config", str(p), "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == EXIT_RANGE
    assert res.stderr.startswith("reskit resonance:")
    p = write(tmp_path, {"system": "pendulum-q2", "preset": "bifurcation"}, "good.json")
    res = subprocess.run([sys.executable, "-m", "reskit.cli", "resonance", "--config", str(p), "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == EXIT_OK
    assert json.loads(res.stdout)["coincidence"] is True
