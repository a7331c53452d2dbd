"""Limit cycles of the averaged system via Poincare return maps.

Rotational cycles (running around the cylinder on one half) are found on the
section v = v_sec, integrating du/dv = u'/v' over one period in the
direction of increasing time.  Oscillatory cycles (around a focus) are found
on the ray {v = v_f, u > u_f} through the focus.  Fixed points come from sign
changes of P(s) - s on a grid, refined by Brent's method; the multiplier P'
(central difference) decides stability: |P'| < 1 is stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .dynamics import AveragedModel, Equilibrium


@dataclass(frozen=True)
class LimitCycle:
    location: str  # "upper", "lower" or "oscillatory"
    stable: bool
    v_section: float
    u_section: float
    multiplier: float
    closure: float
    curve_v: np.ndarray = field(repr=False)
    curve_u: np.ndarray = field(repr=False)


class RotationalMap:
    """u -> u after one turn around the cylinder, starting on v = v_sec.

    ``side`` is +1 for the upper half (u > 0) and -1 for the lower half.
    Points that drop into the oscillation band (|u| < u_floor) or leave
    through |u| > u_limit return NaN.
    """

    def __init__(self, model: AveragedModel, v_sec, side, u_limit, u_floor=None, rtol=1e-11, atol=1e-12):
        self.model = model
        self.v_sec = float(v_sec)
        self.side = int(side)
        self.u_limit = float(u_limit)
        self.u_floor = float(u_floor) if u_floor is not None else 1e-6 * model.u_scale()
        self.rtol, self.atol = rtol, atol
        # direction of v along increasing time on this half
        self.dv_sign = 1.0 if model.coeffs.b1 * side > 0 else -1.0
        self.v_end = self.v_sec + self.dv_sign * model.period

    def _slope(self, v, u):
        du, dv = self.model.rhs(v, u)
        live = (np.abs(u) > self.u_floor) & (np.abs(u) < self.u_limit) & (self.side * u > 0) & (dv * self.dv_sign > 0)
        return np.where(live, du / np.where(live, dv, 1.0), 0.0)

    def batch(self, u0):
        """Vectorized map for a grid of starting values (looser shared error control)."""
        u0 = np.asarray(u0, dtype=float)
        sol = solve_ivp(lambda v, u: self._slope(v, u), (self.v_sec, self.v_end), u0, method="RK45",
                        rtol=1e-9, atol=1e-11, dense_output=False)
        # a frozen trajectory never reaches the end intact: detect via the path
        out = sol.y[:, -1].copy()
        bad = np.any((np.abs(sol.y) <= self.u_floor) | (np.abs(sol.y) >= self.u_limit) | (self.side * sol.y <= 0), axis=1)
        out[bad] = np.nan
        return out

    def __call__(self, u0, dense=False):
        sol = solve_ivp(lambda v, u: self._slope(v, u), (self.v_sec, self.v_end), [float(u0)], method="RK45",
                        rtol=self.rtol, atol=self.atol, dense_output=dense)
        path = sol.y[0]
        if np.any(np.abs(path) <= self.u_floor) or np.any(np.abs(path) >= self.u_limit) or np.any(self.side * path <= 0):
            return (np.nan, None) if dense else np.nan
        return (float(path[-1]), sol.sol) if dense else float(path[-1])


class OscillatoryMap:
    """s -> s after one turn around the focus, on the ray u = u_f + s, v = v_f."""

    def __init__(self, model: AveragedModel, focus: Equilibrium, u_limit, t_max=None, rtol=1e-11, atol=1e-12):
        self.model = model
        self.vf, self.uf = focus.v, focus.u
        self.u_limit = float(u_limit)
        self.rtol, self.atol = rtol, atol
        lam = max(abs(complex(e).imag) for e in focus.eigenvalues) or 1e-3
        self.t_max = t_max if t_max is not None else 50.0 * np.pi / lam
        self.sign = 1.0 if model.coeffs.b1 > 0 else -1.0

    def _leg(self, start, direction):
        vf = self.vf

        def f(t, s):
            du, dv = self.model.rhs(s[0], s[1])
            return [dv, du]

        def cross(t, s):
            return s[0] - vf

        cross.terminal = True
        cross.direction = direction

        def leave(t, s):
            return abs(s[1]) - self.u_limit

        leave.terminal = True
        period = self.model.period

        def wander(t, s):
            # the orbit went round the cylinder instead of round the focus
            return abs(s[0] - vf) - period

        wander.terminal = True
        sol = solve_ivp(f, (0.0, self.t_max), start, method="RK45", rtol=self.rtol, atol=self.atol,
                        events=[cross, leave, wander], dense_output=True)
        if sol.t_events[0].size == 0:
            return None, sol
        return sol.y_events[0][0], sol

    def __call__(self, s, dense=False):
        start = [self.vf, self.uf + float(s)]
        mid, sol1 = self._leg(start, -self.sign)
        if mid is None:
            return (np.nan, None) if dense else np.nan
        end, sol2 = self._leg(list(mid), self.sign)
        if end is None or end[1] <= self.uf:
            return (np.nan, None) if dense else np.nan
        value = float(end[1] - self.uf)
        if not dense:
            return value
        t1 = np.linspace(0, sol1.t[-1], 200)
        t2 = np.linspace(0, sol2.t[-1], 200)
        pts = np.concatenate([sol1.sol(t1), sol2.sol(t2)[:, 1:]], axis=1)
        return value, pts


def _fixed_points(fn, grid, values, xtol):
    d = values - grid
    roots = []
    for i in range(len(grid) - 1):
        a, b = d[i], d[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)) or a * b > 0:
            continue
        try:
            r = brentq(lambda s: fn(s) - s, grid[i], grid[i + 1], xtol=xtol)
        except ValueError:
            continue
        roots.append(r)
    return roots


def _multiplier(fn, s, h):
    fp, fm = fn(s + h), fn(s - h)
    return (fp - fm) / (2 * h)


def rotational_cycles(model: AveragedModel, v_sec, u_max, side, n_grid=48, u_floor=None):
    if model.mu == 0:
        return []
    scale = model.u_scale()
    pmap = RotationalMap(model, v_sec, side, u_limit=3.0 * u_max, u_floor=u_floor)
    grid = side * np.linspace(pmap.u_floor * 10, u_max, n_grid)
    vals = pmap.batch(grid)
    order = np.argsort(grid)
    grid, vals = grid[order], vals[order]
    out = []
    for r in _fixed_points(pmap, grid, vals, 1e-13 * scale):
        h = 1e-6 * scale
        mult = _multiplier(pmap, r, h)
        if not np.isfinite(mult):
            continue
        end, sol = pmap(r, dense=True)
        vv = np.linspace(pmap.v_sec, pmap.v_end, 257)
        uu = sol(vv)[0]
        out.append(
            LimitCycle(
                location="upper" if side > 0 else "lower",
                stable=bool(abs(mult) < 1),
                v_section=float(np.mod(v_sec, model.period)),
                u_section=float(r),
                multiplier=float(mult),
                closure=float(abs(end - r)),
                curve_v=vv,
                curve_u=uu,
            )
        )
    return out


def oscillatory_cycles(model: AveragedModel, focus: Equilibrium, s_max, n_grid=24, u_limit=None):
    if model.mu == 0:
        return []
    scale = model.u_scale()
    pmap = OscillatoryMap(model, focus, u_limit=u_limit or 3.0 * scale)
    grid = np.linspace(s_max / n_grid, s_max, n_grid)
    vals = np.array([pmap(s) for s in grid])
    out = []
    for r in _fixed_points(pmap, grid, vals, 1e-13 * scale):
        mult = _multiplier(pmap, r, 1e-6 * scale)
        if not np.isfinite(mult):
            continue
        end, pts = pmap(r, dense=True)
        out.append(
            LimitCycle(
                location="oscillatory",
                stable=bool(abs(mult) < 1),
                v_section=float(focus.v),
                u_section=float(focus.u + r),
                multiplier=float(mult),
                closure=float(abs(end - r)),
                curve_v=pts[0],
                curve_u=pts[1],
            )
        )
    return out


def band_height(model: AveragedModel, v, v_saddle):
    """Leading-order separatrix half-width |u| at phase v for the saddle v_saddle."""
    V = model.potential()
    val = 2.0 * (V(v) - V(v_saddle)) / model.coeffs.b1
    return float(np.sqrt(max(val, 0.0)))


def find_limit_cycles(model: AveragedModel, equilibria, v_sec: Optional[float] = None, u_max=None,
                      n_grid=48):
    """Rotational cycles on both halves plus oscillatory cycles around foci."""
    if model.mu == 0:
        return []
    scale = model.u_scale()
    u_max = u_max if u_max is not None else 4.0 * scale
    saddles = [e for e in equilibria if e.kind == "saddle"]
    if v_sec is None:
        v_sec = saddles[0].v if saddles else 0.0
    cycles = rotational_cycles(model, v_sec, u_max, +1, n_grid) + rotational_cycles(model, v_sec, u_max, -1, n_grid)
    for eq in equilibria:
        if eq.kind.endswith("focus") or eq.kind == "center":
            s_max = 0.95 * band_height(model, eq.v, saddles[0].v) if saddles else scale
            if s_max > 0:
                cycles += oscillatory_cycles(model, eq, s_max)
    return cycles
