"""Separatrix splitting in the reversible averaged system.

For sigma~ = 0 the symmetric form conserves H = b1 u^2/2 - V(v), V' = A~, up
to O(mu^2).  Along the unperturbed separatrix leaving the saddle v0 in the
direction of increasing v,

    u^2 = (2/b1) (V(w, v0) - V(0, v0)),   V(w, v0) = int_0^w A~(v0 + s) ds,

and the energy gained between consecutive saddles is mu^2 Delta1 with

    Delta1 = (1/b1) int_0^{2pi/n} [2 b1 M(w+v0) (V(w,v0) - V(0,v0)) + N(w+v0)] dw.

Delta1 > 0 means the unstable manifold arrives at the next saddle with more
energy than its stable manifold carries ("split_up"); the branch running the
other way splits by -Delta1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .dynamics import SYMMETRIC, AveragedModel, PreconditionError
from .series import sample_grid

DELTA_TOL = 1e-9


class NoSaddleError(PreconditionError):
    pass


@dataclass(frozen=True)
class ShootingGap:
    """Unstable minus stable manifold at the section halfway between saddles."""

    v_section: float
    u_unstable: float
    u_stable: float
    energy_gap: float

    @property
    def u_gap(self):
        return self.u_unstable - self.u_stable


@dataclass(frozen=True)
class MelnikovResult:
    saddle_v0: float
    delta1: float
    potential_gap: Callable = field(repr=False)
    classification: str
    branch_u_sign: int
    shooting: Optional[ShootingGap] = None


def leading_saddles(model: AveragedModel, samples=1024):
    """Zeros of A~ with b1 A~' > 0 in [0, 2pi/n), refined by Brent's method."""
    A = model.coeffs.A_tilde
    dA = A.derivative()
    period = model.period
    vv = sample_grid(model.n, samples)
    vals = A(vv)
    out = []
    for i in range(samples):
        a, b = vv[i], vv[i] + period / samples
        fa, fb = vals[i], vals[(i + 1) % samples]
        if fa == 0.0:
            root = a
        elif fa * fb < 0:
            root = brentq(A, a, b, xtol=1e-15)
        else:
            continue
        if model.coeffs.b1 * dA(root) > 0:
            out.append(float(np.mod(root, period)))
    return sorted(set(out))


def _require_reversible(model):
    if model.form != SYMMETRIC:
        raise PreconditionError("Melnikov splitting needs the symmetric model form")
    if not model.coeffs.sigma_tilde.is_zero(1e-14):
        raise PreconditionError("Melnikov splitting needs sigma~ = 0 (reversible case)")


def _loop_potential(model, v0):
    Vs = model.potential()

    def gap(w):
        return Vs(v0 + np.asarray(w)) - Vs(v0)

    return gap


def melnikov_delta1(model: AveragedModel, saddle_index=0, nodes=1024, tol=DELTA_TOL, shoot=False):
    """Delta1 for the separatrix loop starting at a leading-order saddle."""
    _require_reversible(model)
    saddles = leading_saddles(model)
    if not saddles:
        raise NoSaddleError("no saddle: A~ has no sign change with b1 A~' > 0")
    v0 = saddles[saddle_index]
    c = model.coeffs
    gap = _loop_potential(model, v0)
    w = sample_grid(model.n, nodes)
    G = gap(w)
    scale = max(float(np.max(np.abs(G))), 1e-300)
    if np.any(G / c.b1 < -1e-9 * scale / abs(c.b1)):
        raise PreconditionError("V(w) - V(0) changes sign along the loop: saddle is not on the outer separatrix")
    M, N = model.M(), model.N()
    integrand = 2 * c.b1 * M(w + v0) * G + N(w + v0)
    delta = float(np.mean(integrand) * model.period / c.b1)
    if abs(delta) < tol:
        kind = "double_loop_bifurcation"
    else:
        kind = "split_up" if delta > 0 else "split_down"
    shooting = separatrix_gap(model, v0) if shoot else None
    return MelnikovResult(v0, delta, gap, kind, 1 if c.b1 > 0 else -1, shooting)


def saddle_point(model: AveragedModel, v_guess, u_guess=0.0, tol=1e-13):
    """Newton refinement of a saddle of the full (not leading-order) field."""
    v, u = float(v_guess), float(u_guess)
    for _ in range(50):
        du, dv = model.rhs(v, u)
        j = model.jacobian(v, u)
        step = np.linalg.solve(j, [-dv, -du])
        v, u = v + step[0], u + step[1]
        if abs(step[0]) + abs(step[1]) < tol:
            break
    return v, u, model.jacobian(v, u)


def _eigen_direction(jac, which):
    vals, vecs = np.linalg.eig(jac)
    idx = int(np.argmax(vals.real)) if which == "unstable" else int(np.argmin(vals.real))
    vec = vecs[:, idx].real
    return vec / np.linalg.norm(vec), float(vals[idx].real)


def _shoot(model, start, direction_time, v_target, rtol, atol, t_max):
    def f(t, s):
        du, dv = model.rhs(s[0], s[1])
        return [direction_time * dv, direction_time * du]

    def hit(t, s):
        return s[0] - v_target

    hit.terminal = True
    sol = solve_ivp(f, (0.0, t_max), start, method="RK45", rtol=rtol, atol=atol, events=hit)
    if not sol.t_events[0].size:
        raise PreconditionError("separatrix did not reach the symmetry section")
    return sol.y_events[0][0]


def separatrix_gap(model: AveragedModel, v0=None, branch=1, offset=1e-7, rtol=1e-11, atol=1e-13, t_max=1e5):
    """Measure the splitting of one separatrix loop by direct shooting.

    ``branch = +1`` follows the loop leaving the saddle towards increasing v,
    ``-1`` the one leaving towards decreasing v.  The unstable manifold of the
    saddle near v0 and the stable manifold of its neighbour one period away
    (integrated backwards) are both stopped halfway, at v0 +- pi/n.
    """
    if v0 is None:
        saddles = leading_saddles(model)
        if not saddles:
            raise NoSaddleError("no saddle found")
        v0 = saddles[0]
    d = 1 if branch > 0 else -1
    period = model.period
    vs, us, jac = saddle_point(model, v0)
    e_u, _ = _eigen_direction(jac, "unstable")
    e_s, _ = _eigen_direction(jac, "stable")
    if d * e_u[0] < 0:
        e_u = -e_u
    if d * e_s[0] > 0:
        e_s = -e_s
    mid = vs + d * period / 2
    pu = _shoot(model, [vs + offset * e_u[0], us + offset * e_u[1]], 1.0, mid, rtol, atol, t_max)
    ps = _shoot(model, [vs + d * period + offset * e_s[0], us + offset * e_s[1]], -1.0, mid, rtol, atol, t_max)
    H = model.energy
    return ShootingGap(float(mid), float(pu[1]), float(ps[1]), float(H(mid, pu[1]) - H(mid, ps[1])))
