"""The averaged system on the phase cylinder {v mod 2pi/n, u}.

Both supported forms are polynomial in u with (2pi/n)-periodic coefficients,

    du/dtau = c0(v) + c1(v) u + c2(v) u^2,
    dv/dtau = d1(v) u + d2(v) u^2 + d3(v) u^3,

so a model is stored as seven trigonometric series evaluated together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .averaging import COINCIDENCE_TOL, ResonanceCoefficients
from .series import SeriesBank, TrigSeries, sample_grid

FULL = "full"
SYMMETRIC = "symmetric"
FORMS = (FULL, SYMMETRIC)


class PreconditionError(ValueError):
    """A structural precondition of an analysis is violated."""


@dataclass(frozen=True)
class AveragedModel:
    """Averaged resonance-zone system built from one set of coefficients.

    ``full`` keeps the detunings B0 = B0_val + mu gamma1 and
    B1 = B1_val + mu gamma2 and all mu, mu^2 terms.  ``symmetric``
    is the reduction for B0 = B1 = 0 with the conservative term
    2 mu (b2/b1) A~ v' dropped, written through M(v) and N(v).
    """

    coeffs: ResonanceCoefficients
    form: str = FULL

    def __post_init__(self):
        c = self.coeffs
        if self.form not in FORMS:
            raise PreconditionError(f"unknown model form {self.form!r}; expected one of {FORMS}")
        if c.b1 == 0:
            raise PreconditionError("b1 = 0: degenerate resonance")
        if self.form == SYMMETRIC:
            if c.gamma1 != 0 or c.gamma2 != 0:
                raise PreconditionError("the symmetric form requires gamma1 = gamma2 = 0")
            if abs(c.B0_val) >= COINCIDENCE_TOL or abs(c.B1_val) >= COINCIDENCE_TOL:
                raise PreconditionError(
                    f"the symmetric form requires B0 = B1 = 0 at the resonance level "
                    f"(got B0={c.B0_val:.3g}, B1={c.B1_val:.3g})"
                )
        du, dv = self._polynomial_terms()
        object.__setattr__(self, "_du", du)
        object.__setattr__(self, "_dv", dv)
        object.__setattr__(self, "_bank", SeriesBank(du + dv[1:]))

    # -- assembly ---------------------------------------------------------
    @property
    def n(self):
        return self.coeffs.n

    @property
    def period(self):
        return 2 * np.pi / self.coeffs.n

    @property
    def mu(self):
        return self.coeffs.mu

    def M(self) -> TrigSeries:
        c = self.coeffs
        r = c.b2 / c.b1
        return (
            c.P1_tilde + c.Q1.derivative() + r * (c.P0_tilde + c.sigma_tilde) + (3 * c.b3 / c.b1) * c.A_tilde
        ) / c.b1 + c.B2_val / c.b1

    def N(self) -> TrigSeries:
        c = self.coeffs
        r = c.b2 / c.b1
        return -(c.P0_tilde * c.Q0) + (c.Q1 - 2 * r * c.Q0) * c.A_tilde

    def _polynomial_terms(self):
        c = self.coeffs
        n, mu, b1 = c.n, c.mu, c.b1
        r = c.b2 / b1
        zero = TrigSeries.zero(n)
        if self.form == FULL:
            du = [
                c.A_tilde + c.B0_eff - (mu * mu / b1) * (c.P0_tilde * c.Q0),
                mu * (c.sigma_tilde + c.B1_eff),
                mu * mu * (c.P1_tilde + c.B2_val + r * c.Q0.derivative()),
            ]
            dv = [
                zero,
                b1 + mu * mu * (c.Q1 - 2 * r * c.Q0),
                TrigSeries.constant(n, mu * c.b2),
                TrigSeries.constant(n, mu * mu * c.b3),
            ]
        else:
            du = [
                c.A_tilde + (mu * mu / b1) * self.N(),
                mu * c.sigma_tilde,
                (mu * mu * b1) * self.M(),
            ]
            dv = [zero, TrigSeries.constant(n, b1), zero, zero]
        return du, dv

    @property
    def du_terms(self):
        return list(self._du)

    @property
    def dv_terms(self):
        return list(self._dv)

    # -- evaluation -------------------------------------------------------
    def rhs(self, v, u):
        """(du/dtau, dv/dtau), vectorized over v, u."""
        u = np.asarray(u, dtype=float)
        c = self._bank.values(v)
        du = c[..., 0] + u * (c[..., 1] + u * c[..., 2])
        dv = u * (c[..., 3] + u * (c[..., 4] + u * c[..., 5]))
        return du, dv

    def jacobian(self, v, u):
        """Jacobian of the flow in state order (v, u), shape (..., 2, 2)."""
        u = np.asarray(u, dtype=float)
        c, dc = self._bank.values_and_derivatives(v)
        j = np.empty(np.broadcast(np.asarray(v), u).shape + (2, 2))
        j[..., 0, 0] = u * (dc[..., 3] + u * (dc[..., 4] + u * dc[..., 5]))
        j[..., 0, 1] = c[..., 3] + u * (2 * c[..., 4] + 3 * u * c[..., 5])
        j[..., 1, 0] = dc[..., 0] + u * (dc[..., 1] + u * dc[..., 2])
        j[..., 1, 1] = c[..., 1] + 2 * u * c[..., 2]
        return j

    @property
    def is_reversible(self):
        """True when the rhs is invariant under (u, tau) -> (-u, -tau)."""
        return self.form == SYMMETRIC and self.coeffs.sigma_tilde.is_zero(1e-15)

    # -- scales -----------------------------------------------------------
    def potential(self) -> TrigSeries:
        """V(v) with V' = A~(v), zero mean."""
        return self.coeffs.A_tilde.antiderivative()

    def separatrix_amplitude(self):
        """Leading-order half-width of the separatrix band, sqrt(2 (max V - min V)/|b1|)."""
        vv = sample_grid(self.n, 512)
        V = self.potential()(vv)
        spread = float(V.max() - V.min())
        return math.sqrt(2 * spread / abs(self.coeffs.b1))

    def u_scale(self):
        amp = self.separatrix_amplitude()
        return amp if amp > 0 else 1.0

    def energy(self, v, u):
        """Leading-order energy b1 u^2/2 - V(v)."""
        return 0.5 * self.coeffs.b1 * np.asarray(u) ** 2 - self.potential()(v)


def averaged_rhs(model: AveragedModel, v, u):
    return model.rhs(v, u)


# ---------------------------------------------------------------------------
# equilibria
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Equilibrium:
    v: float
    u: float
    kind: str
    eigenvalues: tuple
    residual: float

    @property
    def stable(self):
        return self.kind.startswith("stable")


def classify_jacobian(jac, rel_tol=1e-10):
    """Kind of a planar equilibrium from its Jacobian."""
    tr = float(jac[0, 0] + jac[1, 1])
    det = float(jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0])
    scale = float(np.max(np.abs(jac))) or 1.0
    if det < 0:
        return "saddle"
    if abs(tr) <= rel_tol * scale:
        return "center"
    disc = tr * tr - 4 * det
    shape = "focus" if disc < 0 else "node"
    return ("stable_" if tr < 0 else "unstable_") + shape


def _wrap(v, period):
    return np.mod(v, period)


def find_equilibria(model: AveragedModel, u_window=None, seeds=(64, 32), tol=1e-10, max_iter=50):
    """All equilibria with v in [0, 2pi/n) and |u| <= u_window.

    Newton's method runs simultaneously from a seeds[0] x seeds[1] grid;
    converged points are wrapped, deduplicated and classified from the
    Jacobian eigenvalues.
    """
    period = model.period
    U = u_window if u_window is not None else 2.0 * model.u_scale()
    vs = (np.arange(seeds[0]) + 0.5) * period / seeds[0]
    us = np.linspace(-U, U, seeds[1])
    V, Uu = np.meshgrid(vs, us, indexing="ij")
    v, u = V.ravel().copy(), Uu.ravel().copy()
    active = np.ones(v.size, dtype=bool)
    for _ in range(max_iter):
        du, dv = model.rhs(v, u)
        jac = model.jacobian(v, u)
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        ok = np.abs(det) > 1e-300
        safe = np.where(ok, det, 1.0)
        # solve J [step_v, step_u] = -[dv, du]
        step_v = -(jac[:, 1, 1] * dv - jac[:, 0, 1] * du) / safe
        step_u = -(-jac[:, 1, 0] * dv + jac[:, 0, 0] * du) / safe
        step_v = np.where(ok & active, step_v, 0.0)
        step_u = np.where(ok & active, step_u, 0.0)
        # damp wild steps
        big = np.maximum(np.abs(step_v) / period, np.abs(step_u) / U)
        scale = np.where(big > 0.5, 0.5 / np.maximum(big, 1e-300), 1.0)
        v += scale * step_v
        u += scale * step_u
        active &= np.abs(u) <= 3 * U
        if np.all(np.abs(step_v[active]) + np.abs(step_u[active]) < 1e-14):
            break
    du, dv = model.rhs(v, u)
    res = np.hypot(du, dv)
    keep = active & (res < tol) & (np.abs(u) <= U * (1 + 1e-9))
    found = []
    for vi, ui, ri in zip(_wrap(v[keep], period), u[keep], res[keep]):
        dup = False
        for f in found:
            dvv = abs(vi - f[0])
            dvv = min(dvv, period - dvv)
            if dvv < 1e-6 and abs(ui - f[1]) < 1e-6 * max(1.0, U):
                dup = True
                break
        if not dup:
            found.append((float(vi), float(ui), float(ri)))
    out = []
    for vi, ui, ri in sorted(found):
        jac = model.jacobian(vi, ui)
        eig = np.linalg.eigvals(jac)
        out.append(Equilibrium(vi, ui, classify_jacobian(jac), tuple(complex(e) for e in eig), ri))
    return out


def leading_order_kind(model: AveragedModel, v0):
    """Saddle/center rule for u = 0 equilibria of the mu = 0 truncation."""
    s = model.coeffs.b1 * model.coeffs.A_tilde.derivative()(v0)
    return "center" if s < 0 else "saddle"


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    v: np.ndarray
    u: np.ndarray
    escaped: bool = False
    escape_time: Optional[float] = None


def integrate(model: AveragedModel, v0, u0, t_end, rtol=1e-10, atol=1e-10, max_step=np.inf,
              samples=None, u_limit=None):
    """One trajectory by Dormand-Prince 5(4); stops if |u| reaches u_limit."""
    def f(t, s):
        du, dv = model.rhs(s[0], s[1])
        return [dv, du]

    events = None
    if u_limit is not None:
        def leave(t, s):
            return abs(s[1]) - u_limit

        leave.terminal = True
        events = leave
    t_eval = None if samples is None else np.linspace(0.0, t_end, samples)
    sol = solve_ivp(f, (0.0, t_end), [v0, u0], method="RK45", rtol=rtol, atol=atol,
                    max_step=max_step, t_eval=t_eval, events=events)
    escaped = bool(events is not None and sol.t_events[0].size)
    return Trajectory(sol.t, sol.y[0], sol.y[1], escaped, float(sol.t_events[0][0]) if escaped else None)


def integrate_batch(model: AveragedModel, v0, u0, t_end, u_limit, rtol=1e-8, atol=1e-8, samples=201):
    """Many trajectories in one system; escaped ones are frozen where they leave.

    Returns (t, v, u, escaped) with v, u of shape (samples, n_traj).  Error
    control is shared across the batch, so tolerances bound the RMS error.
    """
    v0 = np.asarray(v0, dtype=float).ravel()
    u0 = np.asarray(u0, dtype=float).ravel()
    m = v0.size

    def f(t, s):
        v, u = s[:m], s[m:]
        du, dv = model.rhs(v, u)
        live = np.abs(u) < u_limit
        return np.concatenate([np.where(live, dv, 0.0), np.where(live, du, 0.0)])

    t_eval = np.linspace(0.0, t_end, samples)
    sol = solve_ivp(f, (0.0, t_end), np.concatenate([v0, u0]), method="RK45", rtol=rtol, atol=atol,
                    t_eval=t_eval)
    v, u = sol.y[:m].T, sol.y[m:].T
    escaped = np.any(np.abs(u) >= u_limit * (1 - 1e-9), axis=0)
    return sol.t, v, u, escaped
