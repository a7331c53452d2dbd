"""Command-line front end: ``reskit <command> --config <path> [--out <dir>]``.

Every run reads one JSON document and writes CSV/JSON files into the output
directory.  Numbers are written with 17 significant digits; the outputs
contain nothing time- or machine-dependent, so identical configs give
byte-identical files.

Exit codes: 0 success, 2 configuration error, 3 range error (no resonance,
point outside the cell), 4 structural precondition error (no saddle,
asymmetric model where a symmetric one is required).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .averaging import (
    COINCIDENCE_TOL,
    ResonanceCoefficients,
    ResonanceIndex,
    ResonanceRangeError,
    find_simple_roots,
    solve_resonance,
)
from .dynamics import FULL, SYMMETRIC, AveragedModel, PreconditionError, find_equilibria
from .fullsystem import averaged_to_phase, integrate_full_system
from .hamiltonian import ChartDomainError, ConfigurationError, action_to_k, k_to_action
from .melnikov import melnikov_delta1
from .pendulum import (
    PENDULUM_INDEX,
    PendulumParams,
    bifurcation_point,
    modulus_generating_function,
    pendulum_b0,
    pendulum_b1_b2,
    pendulum_chart,
    pendulum_frequency_derivatives,
    pendulum_omega,
    pendulum_profile,
    pendulum_resonance_coefficients,
    pendulum_system,
)
from .portrait import PortraitOptions, classify_portrait
from .presets import PRESETS
from .series import TrigSeries

EXIT_OK, EXIT_CONFIG, EXIT_RANGE, EXIT_PRECONDITION = 0, 2, 3, 4
COMMANDS = ("genfun", "resonance", "portrait", "melnikov", "simulate", "sweep")
SYSTEMS = ("pendulum-q2", "averaged-model")
PENDULUM_KEYS = ("p1", "p2", "p3", "omega1", "omega2", "epsilon")
SERIES_KEYS = ("A_tilde", "P0_tilde", "Q0", "P1_tilde", "Q1", "sigma_tilde")
FORM_NAMES = {FULL: FULL, SYMMETRIC: SYMMETRIC}


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def fmt(x):
    """Scalar as CSV text; floats with 17 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if x is None:
        return ""
    return str(x)


def _json_value(obj, level):
    pad = "  " * (level + 1)
    end = "  " * level
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_value(v, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [pad + _json_value(v, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj):
    """JSON text with every float written to 17 significant digits."""
    return _json_value(obj, 0) + "\n"


def write_json(path: Path, obj):
    path.write_text(dumps(obj), encoding="utf-8", newline="\n")


def write_csv(path: Path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

class RunConfig:
    """Parsed JSON config plus helpers that name the offending key and line."""

    def __init__(self, data: dict, text: str, path: str):
        self.data, self.text, self.path = data, text, path
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
        self.system = data.get("system")
        if self.system is None:
            raise ConfigError(f"{path}: missing key 'system' (one of {', '.join(SYSTEMS)})")
        if self.system not in SYSTEMS:
            raise self.error("system", f"unknown system {self.system!r}; expected one of {', '.join(SYSTEMS)}")
        self.params = dict(data.get("params", {}))
        self.options = dict(data.get("options", {}))
        if not isinstance(data.get("params", {}), dict):
            raise self.error("params", "must be an object")
        if not isinstance(data.get("options", {}), dict):
            raise self.error("options", "must be an object")
        self.seed = data.get("seed")
        if self.seed is not None and (not isinstance(self.seed, int) or isinstance(self.seed, bool)):
            raise self.error("seed", "must be an integer")
        self.preset = data.get("preset")
        if self.preset is not None:
            if self.preset == "bifurcation":
                base = PendulumParams.at_bifurcation()
                defaults = {k: getattr(base, k) for k in PENDULUM_KEYS}
            elif self.preset in PRESETS:
                defaults = PRESETS[self.preset].config()
                self.options.setdefault("form", PRESETS[self.preset].form)
            else:
                raise self.error("preset", f"unknown preset {self.preset!r}; known: bifurcation, {', '.join(PRESETS)}")
            self.params = {**defaults, **self.params}

    @classmethod
    def load(cls, path):
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
        return cls(data, text, str(path))

    def line_of(self, key):
        m = re.search(r'"' + re.escape(key) + r'"\s*:', self.text)
        return self.text.count("\n", 0, m.start()) + 1 if m else None

    def error(self, key, msg):
        line = self.line_of(key)
        where = f"{self.path}:{line}" if line else self.path
        return ConfigError(f"{where}: key '{key}': {msg}")

    def param(self, key, default=None, required=True):
        if key not in self.params:
            if required and default is None:
                raise ConfigError(f"{self.path}: missing parameter key '{key}' in 'params'")
            return default
        return self._real(key, self.params[key])

    def _real(self, key, val):
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
            raise self.error(key, f"must be a finite number, got {val!r}")
        return float(val)

    def option(self, key, default, kind="real"):
        if key not in self.options:
            return default
        val = self.options[key]
        if kind == "real":
            return self._real(key, val)
        if kind == "positive":
            val = self._real(key, val)
            if not val > 0:
                raise self.error(key, "must be > 0")
            return val
        if kind == "count":
            if isinstance(val, bool) or not isinstance(val, int) or val < 2:
                raise self.error(key, "must be an integer >= 2")
            return val
        if kind == "int":
            if isinstance(val, bool) or not isinstance(val, int):
                raise self.error(key, "must be an integer")
            return val
        if kind == "bool":
            if not isinstance(val, bool):
                raise self.error(key, "must be true or false")
            return val
        if kind == "str":
            if not isinstance(val, str):
                raise self.error(key, "must be a string")
            return val
        raise ValueError(kind)

    def workers(self):
        env = os.environ.get("RESKIT_THREADS")
        if env is not None:
            try:
                n = int(env)
            except ValueError:
                raise ConfigError(f"RESKIT_THREADS must be a positive integer, got {env!r}") from None
            if n < 1:
                raise ConfigError(f"RESKIT_THREADS must be a positive integer, got {env!r}")
            return n
        if "workers" in self.data:
            n = self.data["workers"]
            if isinstance(n, bool) or not isinstance(n, int) or n < 1:
                raise self.error("workers", "must be a positive integer")
            return n
        return os.cpu_count() or 1

    def require_pendulum(self, command):
        if self.system != "pendulum-q2":
            raise self.error("system", f"command '{command}' needs system 'pendulum-q2'")


def pendulum_params(cfg: RunConfig) -> PendulumParams:
    vals = {k: cfg.param(k) for k in PENDULUM_KEYS}
    return PendulumParams(**vals)


def _series(cfg: RunConfig, n, key):
    spec = cfg.data.get("series", {}).get(key)
    if spec is None:
        return TrigSeries.zero(n)
    if not isinstance(spec, dict):
        raise cfg.error(key, "series must be an object with 'cos', 'sin' and optional 'mean'")
    cos = spec.get("cos", [0.0])
    sin = spec.get("sin", [0.0])
    if not isinstance(cos, list) or not isinstance(sin, list):
        raise cfg.error(key, "'cos' and 'sin' must be lists")
    width = max(len(cos), len(sin), 1)
    cos = [cfg._real(key, c) for c in cos] + [0.0] * (width - len(cos))
    sin = [cfg._real(key, s) for s in sin] + [0.0] * (width - len(sin))
    mean = cfg._real(key, spec.get("mean", 0.0))
    if key not in ("Q0", "Q1") and mean != 0.0:
        raise cfg.error(key, "mean-free series must have mean 0")
    return TrigSeries(n, mean, np.array(cos), np.array(sin))


def model_coefficients(cfg: RunConfig) -> ResonanceCoefficients:
    if cfg.system == "pendulum-q2":
        params = pendulum_params(cfg)
        gamma1 = cfg.param("gamma1", 0.0, required=False)
        gamma2 = cfg.param("gamma2", 0.0, required=False)
        B2 = cfg.param("B2_override", None, required=False)
        return pendulum_resonance_coefficients(params, gamma1, gamma2, B2_override=B2)
    n = cfg.params.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise cfg.error("n", "must be a positive integer") if "n" in cfg.params else ConfigError(
            f"{cfg.path}: missing parameter key 'n' in 'params'")
    return ResonanceCoefficients(
        n=n,
        I_res=cfg.param("I_res", 0.0, required=False),
        **{k: _series(cfg, n, k) for k in SERIES_KEYS},
        B0_val=cfg.param("B0", 0.0, required=False),
        B1_val=cfg.param("B1", 0.0, required=False),
        B2_val=cfg.param("B2", 0.0, required=False),
        b1=cfg.param("b1"),
        b2=cfg.param("b2", 0.0, required=False),
        b3=cfg.param("b3", 0.0, required=False),
        mu=cfg.param("mu"),
        gamma1=cfg.param("gamma1", 0.0, required=False),
        gamma2=cfg.param("gamma2", 0.0, required=False),
    )


def build_model(cfg: RunConfig, coeffs=None) -> AveragedModel:
    coeffs = coeffs if coeffs is not None else model_coefficients(cfg)
    default = SYMMETRIC if coeffs.gamma1 == 0 and coeffs.gamma2 == 0 else FULL
    name = cfg.option("form", default, "str")
    if name not in FORM_NAMES:
        raise cfg.error("form", f"unknown form {name!r}; expected 'full' or 'symmetric'")
    return AveragedModel(coeffs, FORM_NAMES[name])


def portrait_options(cfg: RunConfig, workers) -> PortraitOptions:
    grid = cfg.options.get("scan_grid", [20, 20])
    if (not isinstance(grid, list) or len(grid) != 2
            or any(isinstance(g, bool) or not isinstance(g, int) or g < 2 for g in grid)):
        raise cfg.error("scan_grid", "must be a pair of integers >= 2")
    return PortraitOptions(
        scan_grid=tuple(grid),
        u_window_factor=cfg.option("u_window_factor", 2.0, "positive"),
        escape_factor=cfg.option("escape_factor", 3.0, "positive"),
        horizon=cfg.option("horizon", 200.0, "positive"),
        cycle_u_max_factor=cfg.option("cycle_u_max_factor", 4.0, "positive"),
        loop_tol=cfg.option("loop_tol", 1e-8, "positive"),
        separatrix_offset=cfg.option("separatrix_offset", 1e-7, "positive"),
        samples=cfg.option("samples", 201, "count"),
        workers=workers,
        find_cycles=cfg.option("find_cycles", True, "bool"),
        seed=cfg.seed,
    )


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_genfun(cfg: RunConfig, out: Path):
    cfg.require_pendulum("genfun")
    p1 = cfg.param("p1")
    start = cfg.option("k_start", 0.05, "positive")
    stop = cfg.option("k_stop", 0.99, "positive")
    count = cfg.option("k_count", 189, "count")
    p_tol = cfg.option("double_root_p_tol", 1e-3, "positive")
    if not 0 < start < stop < 1:
        raise cfg.error("k_start", "need 0 < k_start < k_stop < 1")
    ks = np.linspace(start, stop, count)
    rows = []
    for k in ks:
        b1, b2 = pendulum_b1_b2(k, p1)
        rows.append((k, k_to_action(k), pendulum_b0(k, p1), b1, b2))
    write_csv(out / "genfun.csv", ("k", "I", "B0", "B1", "B2"), rows)
    roots = find_simple_roots(modulus_generating_function(p1), I_range=(start, stop), n_scan=max(count, 256))
    p_star, k_star, B2_star = bifurcation_point()
    double = None
    if abs(p1 - p_star) <= p_tol:
        double = {"k": k_star, "I": k_to_action(k_star), "p1": p_star, "B2": B2_star}
    report = {
        "p1": p1,
        "roots": [{"k": r.u, "I": k_to_action(r.u), "B1": r.slope, "cycle": r.kind} for r in roots],
        "double_root": double,
        "bifurcation_p1": p_star,
        "double_root_p_tol": p_tol,
    }
    write_json(out / "genfun.json", report)
    return report


def cmd_resonance(cfg: RunConfig, out: Path):
    cfg.require_pendulum("resonance")
    omega1, omega2 = cfg.param("omega1"), cfg.param("omega2")
    p1 = cfg.param("p1", None, required=False)
    n = cfg.option("n", PENDULUM_INDEX.n, "int")
    m1 = cfg.option("m1", PENDULUM_INDEX.m1, "int")
    m2 = cfg.option("m2", PENDULUM_INDEX.m2, "int")
    try:
        idx = ResonanceIndex(n, m1, m2)
    except ValueError as exc:
        raise cfg.error("n", str(exc)) from None
    I_res = solve_resonance(pendulum_profile(), idx, omega1, omega2)
    k = action_to_k(I_res)
    b1, b2, b3 = pendulum_frequency_derivatives(k)
    report = {
        "n": n,
        "m1": m1,
        "m2": m2,
        "target_frequency": idx.target_frequency(omega1, omega2),
        "k_res": k,
        "I_res": I_res,
        "omega": pendulum_omega(k),
        "b1": b1,
        "b2": b2,
        "b3": b3,
    }
    if p1 is not None:
        B1, B2 = pendulum_b1_b2(k, p1)
        B0 = pendulum_b0(k, p1)
        report.update({"B0": B0, "B1": B1, "B2": B2, "coincidence_tol": COINCIDENCE_TOL,
                       "coincidence": bool(abs(B0) < COINCIDENCE_TOL and abs(B1) < COINCIDENCE_TOL)})
    write_json(out / "resonance.json", report)
    return report


def _equilibrium_json(e):
    return {"v": e.v, "u": e.u, "kind": e.kind, "stable": e.stable,
            "eigenvalues": [[complex(z).real, complex(z).imag] for z in e.eigenvalues], "residual": e.residual}


def _portrait_report(model, pp):
    return {
        "form": model.form,
        "mu": model.mu,
        "u_scale": pp.u_scale,
        "taxonomy": pp.taxonomy,
        "family": pp.family,
        "figure": pp.figure,
        "rotational_cycle": pp.rotational_flag,
        "equilibria": [_equilibrium_json(e) for e in pp.equilibria],
        "loops": [{"branch": l.branch, "half": l.half, "u_gap": l.u_gap, "energy_gap": l.energy_gap,
                   "closed": l.closed} for l in pp.loops],
        "limit_cycles": [{"location": c.location, "stable": c.stable, "v_section": c.v_section,
                          "u_section": c.u_section, "multiplier": c.multiplier, "closure": c.closure}
                         for c in pp.limit_cycles],
        "scan": None if pp.scan is None else {"bounded": pp.scan.bounded_count, "escaped": pp.scan.escaped_count},
    }


def cmd_portrait(cfg: RunConfig, out: Path):
    model = build_model(cfg)
    pp = classify_portrait(model, portrait_options(cfg, cfg.workers()))
    report = _portrait_report(model, pp)
    report["seed"] = cfg.seed
    write_json(out / "portrait.json", report)
    rows = []
    for i, s in enumerate(pp.separatrices):
        rows += [(i, s.manifold, s.direction, j, v, u) for j, (v, u) in enumerate(zip(s.v, s.u))]
    write_csv(out / "separatrices.csv", ("curve", "manifold", "direction", "point", "v", "u"), rows)
    rows = []
    for i, c in enumerate(pp.limit_cycles):
        rows += [(i, c.location, c.stable, j, v, u) for j, (v, u) in enumerate(zip(c.curve_v, c.curve_u))]
    write_csv(out / "cycles.csv", ("cycle", "location", "stable", "point", "v", "u"), rows)
    rows = []
    if pp.scan is not None:
        sc = pp.scan
        for i in range(sc.v0.size):
            rows += [(i, sc.escaped[i], j, sc.t[j], sc.v[j, i], sc.u[j, i]) for j in range(sc.t.size)]
    write_csv(out / "trajectories.csv", ("trajectory", "escaped", "point", "t", "v", "u"), rows)
    return report


def cmd_melnikov(cfg: RunConfig, out: Path):
    coeffs = model_coefficients(cfg)
    if coeffs.gamma1 != 0 or coeffs.gamma2 != 0:
        raise PreconditionError("Melnikov splitting needs gamma1 = gamma2 = 0")
    model = build_model(cfg, coeffs)
    if model.form != SYMMETRIC:
        raise PreconditionError("Melnikov splitting needs the symmetric model form")
    res = melnikov_delta1(model, saddle_index=cfg.option("saddle_index", 0, "int"),
                          nodes=cfg.option("nodes", 1024, "count"), shoot=cfg.option("shoot", True, "bool"))
    report = {
        "mu": model.mu,
        "saddle_v0": res.saddle_v0,
        "delta1": res.delta1,
        "mu2_delta1": model.mu**2 * res.delta1,
        "classification": res.classification,
        "branch_u_sign": res.branch_u_sign,
        "shooting": None,
    }
    if res.shooting is not None:
        g = res.shooting
        report["shooting"] = {"v_section": g.v_section, "u_unstable": g.u_unstable, "u_stable": g.u_stable,
                              "u_gap": g.u_gap, "energy_gap": g.energy_gap,
                              "sign_agrees": bool(np.sign(g.energy_gap) == np.sign(res.delta1))}
    write_json(out / "melnikov.json", report)
    return report


def _start_point(cfg, model, params, chart):
    start = cfg.options.get("start", {"equilibrium": "stable"})
    if not isinstance(start, dict):
        raise cfg.error("start", "must be an object")
    mu = model.mu
    c = model.coeffs
    if "x" in start or "y" in start:
        return cfg._real("x", start.get("x")), cfg._real("y", start.get("y")), None
    if "equilibrium" in start:
        which = start["equilibrium"]
        eqs = find_equilibria(model)
        # a center counts as stable: it is the resting point of the conservative truncation
        pick = [e for e in eqs if (e.kind == "saddle" if which == "saddle" else e.stable or e.kind == "center")]
        if which not in ("stable", "saddle"):
            raise cfg.error("equilibrium", "must be 'stable' or 'saddle'")
        if not pick:
            raise PreconditionError(f"the averaged model has no {which} equilibrium")
        v, u = pick[0].v, pick[0].u
        u += cfg._real("u_offset", start.get("u_offset", 0.0)) * model.u_scale()
    else:
        if "v" not in start or "u" not in start:
            raise cfg.error("start", "give 'x'/'y', 'v'/'u' or 'equilibrium'")
        v = cfg._real("v", start["v"])
        u = cfg._real("u", start["u"])
    x, y = averaged_to_phase(chart, c.I_res, mu, v, u, PENDULUM_INDEX, params.omega1, params.omega2)
    return x, y, (v, u)


def cmd_simulate(cfg: RunConfig, out: Path):
    cfg.require_pendulum("simulate")
    params = pendulum_params(cfg)
    model = build_model(cfg)
    chart = pendulum_chart()
    x0, y0, vu = _start_point(cfg, model, params, chart)
    T = cfg.option("T", 10.0 / params.epsilon, "positive")
    eps_full = cfg.option("epsilon_full", params.epsilon, "real")
    if eps_full < 0:
        raise cfg.error("epsilon_full", "must be >= 0")
    tr = integrate_full_system(
        pendulum_system(params), chart, x0, y0, T, PENDULUM_INDEX,
        rtol=cfg.option("rtol", 1e-9, "positive"), atol=cfg.option("atol", 1e-9, "positive"),
        max_sample_step=cfg.option("max_sample_step", 0.5, "positive"), epsilon=eps_full,
    )
    write_csv(out / "trajectory.csv", ("t", "x", "y", "I", "v"), zip(tr.t, tr.x, tr.y, tr.I, tr.v))
    I_res = model.coeffs.I_res
    band = 5.0 * math.sqrt(params.epsilon)
    period = model.period
    coarse = tr.v[:: max(1, int(round(cfg.option("monotone_window", 50.0, "positive") / (tr.t[1] - tr.t[0]))))]
    steps = np.diff(coarse)
    report = {
        "epsilon": params.epsilon,
        "epsilon_full": eps_full,
        "T": T,
        "start": {"x": x0, "y": y0, "v": None if vu is None else vu[0], "u": None if vu is None else vu[1]},
        "I_res": I_res,
        "I0": float(tr.I[0]),
        "max_abs_I_minus_Ires": tr.max_action_deviation(I_res),
        "max_abs_I_minus_I0": tr.max_action_deviation(tr.I[0]),
        "band": band,
        "within_band": bool(tr.max_action_deviation(I_res) <= band),
        "v_drift": tr.v_drift(),
        "v_period": period,
        "period_crossing_time": tr.first_crossing(period),
        "v_monotone": bool(steps.size > 0 and (np.all(steps > 0) or np.all(steps < 0))),
        "exit_time": tr.exit_time,
    }
    write_json(out / "simulate.json", report)
    return report


def _sweep_values(cfg):
    vals = cfg.options.get("values")
    if vals is not None:
        if not isinstance(vals, list) or not vals:
            raise cfg.error("values", "must be a non-empty list")
        return [cfg._real("values", v) for v in vals]
    start = cfg.option("start", None, "real")
    stop = cfg.option("stop", None, "real")
    if start is None or stop is None:
        raise ConfigError(f"{cfg.path}: sweep needs options 'values' or 'start'/'stop'/'count'")
    return list(np.linspace(start, stop, cfg.option("count", 11, "count")))


def cmd_sweep(cfg: RunConfig, out: Path):
    name = cfg.option("parameter", None, "str")
    if name is None:
        raise ConfigError(f"{cfg.path}: missing option 'parameter' in 'options'")
    values = _sweep_values(cfg)
    workers = cfg.workers()
    base_opts = portrait_options(cfg, 1)
    # validate the base model once so configuration errors surface before the pool starts
    build_model(cfg)

    def run(value):
        sub = RunConfig({**cfg.data, "params": {**cfg.params, name: value}, "options": cfg.options,
                         "preset": None}, cfg.text, cfg.path)
        model = build_model(sub)
        pp = classify_portrait(model, base_opts)
        loops = {l.half: l.u_gap for l in pp.loops}
        return (
            value, pp.taxonomy, pp.figure or "", pp.family, len(pp.equilibria),
            sum(e.kind == "saddle" for e in pp.equilibria), len(pp.cycles_at("upper")),
            len(pp.cycles_at("lower")), len(pp.cycles_at("oscillatory")),
            loops.get("upper", math.nan), loops.get("lower", math.nan),
            -1 if pp.scan is None else pp.scan.bounded_count, -1 if pp.scan is None else pp.scan.escaped_count,
        )

    slots = [None] * len(values)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for i, row in enumerate(pool.map(run, values)):
            slots[i] = (i,) + row
    header = ("index", "value", "taxonomy", "figure", "family", "equilibria", "saddles", "cycles_upper",
              "cycles_lower", "cycles_oscillatory", "gap_upper", "gap_lower", "bounded", "escaped")
    write_csv(out / "sweep.csv", header, slots)
    report = {"parameter": name, "count": len(values), "taxonomies": [r[2] for r in slots]}
    write_json(out / "sweep.json", report)
    return report


HANDLERS = {
    "genfun": cmd_genfun,
    "resonance": cmd_resonance,
    "portrait": cmd_portrait,
    "melnikov": cmd_melnikov,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def run(command, config_path, out_dir="."):
    """Run one command; returns (exit_code, report or error message)."""
    try:
        cfg = RunConfig.load(config_path)
        out = Path(out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"output directory {out_dir}: {exc.strerror}") from None
        if not os.access(out, os.W_OK):
            raise ConfigError(f"output directory {out_dir} is not writable")
        return EXIT_OK, HANDLERS[command](cfg, out)
    except (ConfigError, ConfigurationError) as exc:
        return EXIT_CONFIG, str(exc)
    except (ResonanceRangeError, ChartDomainError) as exc:
        return EXIT_RANGE, str(exc)
    except PreconditionError as exc:
        return EXIT_PRECONDITION, str(exc)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="reskit", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", default=".", help="output directory (created if missing)")
    args = parser.parse_args(argv)
    code, result = run(args.command, args.config, args.out)
    if code == EXIT_OK:
        summary = {k: v for k, v in result.items() if not isinstance(v, (list, dict))}
        sys.stdout.write(dumps(summary))
    else:
        sys.stderr.write(f"reskit {args.command}: {result}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
