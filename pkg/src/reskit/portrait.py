"""Phase portraits of the averaged system and the passability taxonomy.

Labels:

* ``passable``: no equilibria (or every scanned trajectory escapes);
* ``impassable``: both separatrix loops closed, or every scanned trajectory
  stays bounded;
* ``bifurcation_case``: exactly one of the two loops is closed;
* ``partly_passable``: bounded and escaping scan trajectories coexist.

A scan trajectory escapes when |u| exceeds ``escape_factor`` times the
separatrix half-width within the horizon.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .cycles import find_limit_cycles
from .dynamics import SYMMETRIC, AveragedModel, Equilibrium, find_equilibria, integrate_batch
from .melnikov import separatrix_gap

SCAN_CHUNK = 50


@dataclass(frozen=True)
class PortraitOptions:
    scan_grid: tuple = (20, 20)
    u_window_factor: float = 2.0
    escape_factor: float = 3.0
    horizon: float = 200.0
    cycle_u_max_factor: float = 4.0
    loop_tol: float = 1e-8
    separatrix_offset: float = 1e-7
    separatrix_horizon: float = 200.0
    samples: int = 201
    workers: int = 1
    find_cycles: bool = True
    seed: Optional[int] = None  # None: regular grid; otherwise uniform random starts

    def __post_init__(self):
        if min(self.scan_grid) < 2:
            raise ValueError("scan grid counts must be >= 2")
        for name in ("u_window_factor", "escape_factor", "horizon", "cycle_u_max_factor", "loop_tol",
                     "separatrix_offset", "separatrix_horizon"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class Separatrix:
    saddle_v: float
    manifold: str  # "unstable" or "stable"
    direction: int  # +1 leaves/arrives on the increasing-v side
    v: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class LoopStatus:
    branch: int
    half: str
    u_gap: float
    energy_gap: float
    closed: bool


@dataclass(frozen=True)
class ScanResult:
    v0: np.ndarray
    u0: np.ndarray
    escaped: np.ndarray
    t: np.ndarray
    v: np.ndarray
    u: np.ndarray

    @property
    def bounded_count(self):
        return int(np.sum(~self.escaped))

    @property
    def escaped_count(self):
        return int(np.sum(self.escaped))


@dataclass(frozen=True)
class PhasePortrait:
    equilibria: list
    separatrices: list
    loops: list
    limit_cycles: list
    scan: Optional[ScanResult]
    taxonomy: str
    family: str
    figure: Optional[str]
    u_scale: float

    @property
    def rotational_flag(self):
        return any(c.location in ("upper", "lower") for c in self.limit_cycles)

    def cycles_at(self, location):
        return [c for c in self.limit_cycles if c.location == location]

    def kinds(self):
        return [e.kind for e in self.equilibria]


def sigma_family(model: AveragedModel, samples=512):
    """'zero', 'alternating' or 'constant' sign of sigma(v) = sigma~ + B1."""
    c = model.coeffs
    sig = c.sigma_tilde if model.form == SYMMETRIC else c.sigma()
    vals = sig(np.linspace(0.0, model.period, samples, endpoint=False))
    if np.all(np.abs(vals) <= 1e-14):
        return "zero"
    if np.min(vals) < 0 < np.max(vals):
        return "alternating"
    return "constant"


def figure_family(model: AveragedModel):
    fam = sigma_family(model)
    if fam == "zero":
        return "1"
    if model.form == SYMMETRIC:
        return "2" if fam == "alternating" else "3"
    return "3" if fam == "constant" else "4"


def _half(model, branch):
    return "upper" if branch * model.coeffs.b1 > 0 else "lower"


def loop_statuses(model: AveragedModel, saddle: Equilibrium, opts: PortraitOptions):
    out = []
    scale = model.u_scale()
    for branch in (1, -1):
        try:
            g = separatrix_gap(model, saddle.v, branch=branch, offset=opts.separatrix_offset)
        except ValueError:
            out.append(LoopStatus(branch, _half(model, branch), math.nan, math.nan, False))
            continue
        closed = abs(g.u_gap) <= opts.loop_tol * scale
        out.append(LoopStatus(branch, _half(model, branch), g.u_gap, g.energy_gap, closed))
    return out


def trace_separatrices(model: AveragedModel, saddle: Equilibrium, opts: PortraitOptions, u_limit):
    jac = model.jacobian(saddle.v, saddle.u)
    vals, vecs = np.linalg.eig(jac)
    out = []

    def f_dir(sign):
        def f(t, s):
            du, dv = model.rhs(s[0], s[1])
            return [sign * dv, sign * du]

        return f

    def leave(t, s):
        return abs(s[1]) - u_limit

    leave.terminal = True
    for idx, manifold in ((int(np.argmax(vals.real)), "unstable"), (int(np.argmin(vals.real)), "stable")):
        vec = vecs[:, idx].real
        vec = vec / np.linalg.norm(vec)
        for direction in (1, -1):
            e = vec if vec[0] * direction > 0 else -vec
            start = [saddle.v + opts.separatrix_offset * e[0], saddle.u + opts.separatrix_offset * e[1]]
            sign = 1.0 if manifold == "unstable" else -1.0
            sol = solve_ivp(f_dir(sign), (0.0, opts.separatrix_horizon), start, method="RK45", rtol=1e-10,
                            atol=1e-12, events=leave, dense_output=True)
            t = np.linspace(0.0, sol.t[-1], opts.samples)
            pts = sol.sol(t)
            out.append(Separatrix(saddle.v, manifold, direction, pts[0], pts[1]))
    return out


def scan_passability(model: AveragedModel, opts: PortraitOptions, v_origin=0.0):
    """Integrate a grid of initial conditions over one cell of the cylinder.

    The grid is split into fixed-size chunks, so the outcome does not depend
    on the number of workers.  With ``opts.seed`` set, the same number of
    starts is drawn uniformly from the cell instead.
    """
    scale = model.u_scale()
    nv, nu = opts.scan_grid
    W = opts.u_window_factor * scale
    if opts.seed is None:
        vs = v_origin + (np.arange(nv) + 0.5) * model.period / nv
        us = np.linspace(-W, W, nu)
        V, U = np.meshgrid(vs, us, indexing="ij")
        v0, u0 = V.ravel(), U.ravel()
    else:
        rng = np.random.default_rng(opts.seed)
        v0 = v_origin + rng.uniform(0.0, model.period, nv * nu)
        u0 = rng.uniform(-W, W, nv * nu)
    limit = opts.escape_factor * scale
    chunks = [slice(i, min(i + SCAN_CHUNK, v0.size)) for i in range(0, v0.size, SCAN_CHUNK)]

    def run(sl):
        return integrate_batch(model, v0[sl], u0[sl], opts.horizon, limit, samples=opts.samples)

    if opts.workers > 1:
        with ThreadPoolExecutor(max_workers=opts.workers) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(sl) for sl in chunks]
    t = results[0][0]
    v = np.concatenate([r[1] for r in results], axis=1)
    u = np.concatenate([r[2] for r in results], axis=1)
    escaped = np.concatenate([r[3] for r in results])
    return ScanResult(v0, u0, escaped, t, v, u)


def _taxonomy(equilibria, loops, scan):
    if not equilibria:
        return "passable"
    closed = sum(1 for l in loops if l.closed)
    if loops and closed == 2:
        return "impassable"
    if closed == 1:
        return "bifurcation_case"
    if scan is None:
        return "undetermined"
    if scan.escaped_count == 0:
        return "impassable"
    if scan.bounded_count == 0:
        return "passable"
    return "partly_passable"


def _figure_tag(family, taxonomy, loops, cycles):
    if taxonomy == "passable" or taxonomy == "undetermined":
        return None
    if family == "1":
        if taxonomy == "impassable" and loops and all(l.closed for l in loops):
            return "1b"
        if taxonomy == "partly_passable":
            upper = [l for l in loops if l.half == "upper"]
            if upper and math.isfinite(upper[0].u_gap):
                # on the upper half the unstable manifold passes inside (1a) or outside (1c)
                return "1a" if upper[0].u_gap < 0 else "1c"
        return None
    if family == "2":
        rotational = [c for c in cycles if c.location in ("upper", "lower")]
        if taxonomy == "impassable":
            return "2b" if any(not c.stable for c in rotational) else "2a"
        if taxonomy == "bifurcation_case":
            return "2c"
        if taxonomy == "partly_passable":
            return "2d"
        return None
    tags = {"impassable": "c", "bifurcation_case": "b|d", "partly_passable": "a|e"}
    if taxonomy in tags:
        return "|".join(family + t for t in tags[taxonomy].split("|"))
    return None


def classify_portrait(model: AveragedModel, opts: Optional[PortraitOptions] = None) -> PhasePortrait:
    opts = opts or PortraitOptions()
    scale = model.u_scale()
    equilibria = find_equilibria(model, u_window=opts.u_window_factor * scale)
    saddles = [e for e in equilibria if e.kind == "saddle"]
    separatrices, loops = [], []
    if saddles:
        separatrices = trace_separatrices(model, saddles[0], opts, opts.escape_factor * scale)
        loops = loop_statuses(model, saddles[0], opts)
    cycles = []
    if opts.find_cycles and equilibria:
        cycles = find_limit_cycles(model, equilibria, u_max=opts.cycle_u_max_factor * scale)
    scan = None
    closed = sum(1 for l in loops if l.closed)
    if equilibria and closed == 0:
        scan = scan_passability(model, opts)
    taxonomy = _taxonomy(equilibria, loops, scan)
    family = figure_family(model)
    return PhasePortrait(
        equilibria=equilibria,
        separatrices=separatrices,
        loops=loops,
        limit_cycles=cycles,
        scan=scan,
        taxonomy=taxonomy,
        family=family,
        figure=_figure_tag(family, taxonomy, loops, cycles),
        u_scale=scale,
    )
