"""Direct integration of the forced system, projected onto the resonance phase.

The averaged variables map back as I = I_res + mu u and
theta = v + (m1 theta1 + m2 theta2)/n with theta_i = omega_i t, so a point
(v, u) of the averaged cylinder gives an initial condition of the full
system at t = 0 and a full trajectory gives I(t) and an unwrapped v(t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .averaging import ResonanceIndex
from .hamiltonian import ActionAngleChart, ChartDomainError, PerturbedSystem


@dataclass(frozen=True)
class FullTrajectory:
    t: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    I: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)  # unwrapped
    v: np.ndarray = field(repr=False)  # unwrapped resonance phase
    exit_time: Optional[float] = None

    @property
    def exited(self):
        return self.exit_time is not None

    def max_action_deviation(self, I_ref):
        return float(np.max(np.abs(self.I - I_ref)))

    def v_drift(self):
        return float(self.v[-1] - self.v[0])

    def first_crossing(self, distance):
        """Earliest time at which |v - v(0)| reaches ``distance``, or None."""
        hit = np.nonzero(np.abs(self.v - self.v[0]) >= distance)[0]
        return float(self.t[hit[0]]) if hit.size else None


def cell_energy_range(system: PerturbedSystem, chart: ActionAngleChart, shrink=1e-9):
    """Energy values at the two ends of the chart's action interval."""
    lo, hi = chart.I_range
    d = shrink * (hi - lo)
    out = []
    for I in (lo + d, hi - d):
        out.append(float(system.hamiltonian(chart.x_of(I, 0.0), chart.y_of(I, 0.0))))
    return min(out), max(out)


def averaged_to_phase(chart: ActionAngleChart, I_res, mu, v, u, idx: ResonanceIndex, omega1, omega2, t=0.0):
    """Phase point (x, y) of the full system corresponding to (v, u) at time t."""
    I = I_res + mu * u
    chart.check_action(I)
    theta = v + (idx.m1 * omega1 + idx.m2 * omega2) * t / idx.n
    return float(chart.x_of(I, theta)), float(chart.y_of(I, theta))


def integrate_full_system(
    system: PerturbedSystem,
    chart: ActionAngleChart,
    x0,
    y0,
    T,
    idx: ResonanceIndex,
    rtol=1e-9,
    atol=1e-9,
    max_sample_step=0.5,
    energy_range=None,
    epsilon: Optional[float] = None,
):
    """Integrate x' = H_y + eps g, y' = -H_x + eps f on [0, T].

    Samples are taken every ``max_sample_step`` time units at most, which keeps
    the angle unwrapping unambiguous.  Integration stops if the energy leaves
    the chart's cell; the time is reported as ``exit_time``.  ``epsilon``
    replaces the system's value (0 gives the unperturbed flow).
    """
    if chart.to_action_angle is None:
        raise ValueError("chart has no inverse map for trajectory projection")
    if not T > 0:
        raise ValueError("T must be positive")
    e_lo, e_hi = energy_range if energy_range is not None else cell_energy_range(system, chart)
    h0 = float(system.hamiltonian(x0, y0))
    if not e_lo < h0 < e_hi:
        raise ChartDomainError(f"initial energy {h0} outside the cell ({e_lo}, {e_hi})")

    eps = system.epsilon if epsilon is None else float(epsilon)
    w1, w2 = system.omega1, system.omega2

    def rhs(t, s):
        x, y = s[0], s[1]
        hx, hy = system.gradient(x, y)
        th1, th2 = w1 * t, w2 * t
        return [hy + eps * system.g_field(x, y, th1, th2), -hx + eps * system.f_field(x, y, th1, th2)]

    def leave(t, s):
        h = system.hamiltonian(s[0], s[1])
        return min(h - e_lo, e_hi - h)

    leave.terminal = True
    n_samples = int(math.ceil(T / max_sample_step)) + 1
    t_eval = np.linspace(0.0, T, n_samples)
    sol = solve_ivp(rhs, (0.0, T), [x0, y0], method="RK45", rtol=rtol, atol=atol, t_eval=t_eval, events=leave)
    exit_time = float(sol.t_events[0][0]) if sol.t_events[0].size else None
    t, x, y = sol.t, sol.y[0], sol.y[1]
    if exit_time is not None:
        keep = t < exit_time
        t, x, y = t[keep], x[keep], y[keep]
    I, theta = chart.to_action_angle(x, y)
    theta = np.unwrap(theta)
    v = theta - (idx.m1 * system.omega1 + idx.m2 * system.omega2) * t / idx.n
    return FullTrajectory(t, x, y, np.asarray(I), theta, v, exit_time)
