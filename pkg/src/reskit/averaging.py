"""Generating function, resonance levels and resonance-zone coefficients.

All integrals over angles use the periodic trapezoid rule, which converges
spectrally for the smooth periodic integrands met here; grids are doubled
until two successive results agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from ._numerics import richardson_derivative
from .hamiltonian import (
    ActionAngleChart,
    ConfigurationError,
    FrequencyProfile,
    PerturbedSystem,
    action_angle_rhs,
    frequency_profile_from_chart,
)
from .series import TrigSeries, sample_grid

COINCIDENCE_TOL = 1e-6


class QuadratureError(RuntimeError):
    """A periodic quadrature failed to settle within its node budget."""


class ResonanceRangeError(ValueError):
    """The resonant frequency is not attained inside the cell."""


class RootFindingError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# generating function
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeneratingFunction:
    """B0(u) with B1 = B0' and B2 = B0''/2, all as functions of the action."""

    b0: Callable[[float], float]
    b1: Callable[[float], float]
    b2: Callable[[float], float]
    I_range: tuple = (-math.inf, math.inf)


def _settled(compute, start, max_nodes, tol, what):
    nodes = start
    prev = compute(nodes)
    while nodes < max_nodes:
        nodes *= 2
        cur = compute(nodes)
        scale = max(1.0, float(np.max(np.abs(cur))))
        if float(np.max(np.abs(cur - prev))) <= tol * scale:
            return cur
        prev = cur
    raise QuadratureError(f"{what}: no convergence with {max_nodes} nodes")


def generating_function(
    system: PerturbedSystem,
    chart: ActionAngleChart,
    theta_nodes=64,
    torus_nodes=16,
    tol=1e-12,
    fd_step=None,
) -> GeneratingFunction:
    """Poincare-Pontryagin function from the torus-averaged perturbation.

    B0(u) = (1/2pi) int_0^{2pi} [f0 X_theta - g0 Y_theta] dtheta, with g0, f0
    the averages of g, f over both forcing phases.  B1 and B2 are
    Richardson-extrapolated differences of B0 in the action.
    """
    lo, hi = chart.I_range
    t = 2 * np.pi * np.arange(torus_nodes) / torus_nodes
    t1, t2 = np.meshgrid(t, t, indexing="ij")

    def integrand_mean(I, nodes):
        th = 2 * np.pi * np.arange(nodes) / nodes
        x = chart.x_of(I, th)[:, None, None]
        y = chart.y_of(I, th)[:, None, None]
        f0 = np.mean(system.f_field(x, y, t1, t2) * np.ones_like(t1), axis=(1, 2))
        g0 = np.mean(system.g_field(x, y, t1, t2) * np.ones_like(t1), axis=(1, 2))
        return np.mean(f0 * chart.x_dtheta(I, th) - g0 * chart.y_dtheta(I, th))

    def b0(I):
        I = float(I)
        chart.check_action(I)
        return float(_settled(lambda m: integrand_mean(I, m), theta_nodes, 4096, tol, "B0 quadrature"))

    step = fd_step or 2e-3 * (hi - lo)

    def b1(I):
        return float(richardson_derivative(b0, float(I), step, order=1, levels=3))

    def b2(I):
        return 0.5 * float(richardson_derivative(b0, float(I), step, order=2, levels=3))

    return GeneratingFunction(b0, b1, b2, chart.I_range)


@dataclass(frozen=True)
class SimpleRoot:
    u: float
    slope: float

    @property
    def stable(self):
        return self.slope < 0

    @property
    def kind(self):
        return "stable" if self.stable else "unstable"


def _interior_grid(I_range, n):
    lo, hi = I_range
    return lo + (hi - lo) * (np.arange(n) + 0.5) / n


def find_simple_roots(gf: GeneratingFunction, I_range=None, n_scan=512, xtol=1e-13):
    """Sign-change roots of B0 on a scan grid, refined by Brent's method.

    Each root carries B1 there; B1 < 0 marks a stable limit cycle of the
    autonomous averaged system.
    """
    I_range = I_range or gf.I_range
    grid = _interior_grid(I_range, n_scan)
    vals = np.array([gf.b0(float(u)) for u in grid])
    roots = []
    for i in range(n_scan - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            u = float(grid[i])
        elif a * b < 0:
            u = brentq(gf.b0, grid[i], grid[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps)
        else:
            continue
        roots.append(SimpleRoot(u, float(gf.b1(u))))
    return roots


@dataclass(frozen=True)
class DoubleRoot:
    p: float
    u: float
    b2: float
    higher_order: bool = False


def find_double_root(
    family: Callable[[float], GeneratingFunction],
    I_range,
    p_guess=0.0,
    u_guess=None,
    affine=False,
    n_scan=512,
    tol=1e-12,
    degenerate_tol=1e-8,
    max_iter=60,
) -> DoubleRoot:
    """Solve B0(u; p) = B1(u; p) = 0 for the parameter p and level u.

    ``family(p)`` returns the generating function at parameter p.  For an
    affine family (B0 = c0 + p c1) p is eliminated exactly and the remaining
    scalar equation B1(u; p(u)) = 0 is solved by scanning and Brent's method;
    otherwise a two-dimensional Newton iteration on (p, u) is used.  The
    result flags B2 ~ 0 as a root of higher multiplicity.
    """
    if affine:
        g0, g1 = family(0.0), family(1.0)

        def p_of(u):
            c0 = g0.b0(u)
            c1 = g1.b0(u) - c0
            return -c0 / c1

        def residual(u):
            p = p_of(u)
            return g0.b1(u) + p * (g1.b1(u) - g0.b1(u))

        grid = _interior_grid(I_range, n_scan)
        vals = np.array([residual(float(u)) for u in grid])
        candidates = []
        for i in range(n_scan - 1):
            if np.isfinite(vals[i]) and np.isfinite(vals[i + 1]) and vals[i] * vals[i + 1] < 0:
                u = brentq(residual, grid[i], grid[i + 1], xtol=tol, rtol=4 * np.finfo(float).eps)
                p = p_of(u)
                # reject the spurious sign change across a pole of p(u)
                if abs(residual(u)) < 1e-8 * max(1.0, abs(p)):
                    candidates.append((u, p))
        if not candidates:
            raise RootFindingError("no double root in the scanned range")
        if u_guess is not None:
            u, p = min(candidates, key=lambda c: abs(c[0] - u_guess))
        else:
            u, p = min(candidates, key=lambda c: abs(c[1] - p_guess))
    else:
        p = float(p_guess)
        if u_guess is None:
            gf = family(p)
            grid = _interior_grid(I_range, n_scan)
            u = float(grid[np.argmin([abs(gf.b1(float(s))) for s in grid])])
        else:
            u = float(u_guess)
        for _ in range(max_iter):
            gf = family(p)
            r0, r1 = gf.b0(u), gf.b1(u)
            dp = 1e-6 * max(1.0, abs(p))
            gfp = family(p + dp)
            jac = np.array(
                [[(gfp.b0(u) - r0) / dp, r1], [(gfp.b1(u) - r1) / dp, 2.0 * gf.b2(u)]]
            )
            try:
                dp_, du_ = np.linalg.solve(jac, [-r0, -r1])
            except np.linalg.LinAlgError as exc:
                raise RootFindingError("singular Jacobian in double-root Newton") from exc
            p, u = p + dp_, u + du_
            if abs(dp_) < tol * max(1.0, abs(p)) and abs(du_) < tol * max(1.0, abs(u)):
                break
        else:
            raise RootFindingError("double-root Newton did not converge")
    b2 = family(p).b2(u)
    return DoubleRoot(float(p), float(u), float(b2), abs(b2) < degenerate_tol)


# ---------------------------------------------------------------------------
# resonance levels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResonanceIndex:
    n: int
    m1: int
    m2: int

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError("resonance order n must be >= 1")
        if math.gcd(math.gcd(self.n, abs(self.m1)), abs(self.m2)) != 1:
            raise ConfigurationError(f"(n, m1, m2) = {(self.n, self.m1, self.m2)} are not coprime")

    def target_frequency(self, omega1, omega2):
        return (self.m1 * omega1 + self.m2 * omega2) / self.n


def solve_resonance(profile: FrequencyProfile, idx: ResonanceIndex, omega1, omega2, tol=1e-12):
    """Action I with n omega(I) = m1 omega1 + m2 omega2, by bisection.

    omega must be monotone on the cell; the endpoints are excluded.
    """
    direction = profile.check_monotone()
    target = idx.target_frequency(omega1, omega2)
    lo, hi = profile.I_range
    # keep strictly inside the open cell
    span = hi - lo
    a, b = lo + 1e-12 * span, hi - 1e-12 * span
    fa = profile.omega(a) - target
    fb = profile.omega(b) - target
    if fa * fb > 0:
        raise ResonanceRangeError(
            f"target frequency {target!r} outside omega range "
            f"[{min(fa, fb) + target!r}, {max(fa, fb) + target!r}]"
        )
    for _ in range(200):
        mid = 0.5 * (a + b)
        fm = profile.omega(mid) - target
        if fm == 0.0 or (b - a) < 4 * np.finfo(float).eps * abs(mid):
            break
        if (fm > 0) == (direction > 0):
            b = mid
        else:
            a = mid
    mid = 0.5 * (a + b)
    resid = abs(idx.n * profile.omega(mid) - idx.n * target)
    if resid > tol * max(1.0, abs(idx.n * target)):
        raise ResonanceRangeError(f"resonance residual {resid:.3g} above tolerance")
    return mid


# ---------------------------------------------------------------------------
# resonance-zone coefficients
# ---------------------------------------------------------------------------

def mean_free_decompose(fn, period, samples=256):
    """(mean, tilde) of a periodic function by periodic trapezoid quadrature."""
    v = period * np.arange(samples) / samples
    mean = float(np.mean(fn(v)))

    def tilde(x):
        return fn(x) - mean

    return mean, tilde


@dataclass(frozen=True)
class ResonanceCoefficients:
    """Coefficient functions and scalars of the resonance-zone averaged system.

    The tilde functions are mean-free; Q0 and Q1 are kept whole.  B0, B1
    enter the averaged model shifted by the detunings mu*gamma1, mu*gamma2.
    """

    n: int
    I_res: float
    A_tilde: TrigSeries
    P0_tilde: TrigSeries
    Q0: TrigSeries
    P1_tilde: TrigSeries
    Q1: TrigSeries
    sigma_tilde: TrigSeries
    B0_val: float
    B1_val: float
    B2_val: float
    b1: float
    b2: float
    b3: float
    mu: float
    gamma1: float = 0.0
    gamma2: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def period(self):
        return 2 * np.pi / self.n

    @property
    def coincidence(self):
        return abs(self.B0_val) < COINCIDENCE_TOL and abs(self.B1_val) < COINCIDENCE_TOL

    @property
    def B0_eff(self):
        return self.B0_val + self.mu * self.gamma1

    @property
    def B1_eff(self):
        return self.B1_val + self.mu * self.gamma2

    def sigma(self):
        return self.sigma_tilde + self.B1_eff


def _torus_coefficients(system, chart, idx, I, v_grid, nodes):
    """Torus averages of F and G at fixed I for each v (shape (len(v),))."""
    n = idx.n
    t = 2 * np.pi * n * np.arange(nodes) / nodes
    t1, t2 = np.meshgrid(t, t, indexing="ij")
    phase = (idx.m1 * t1 + idx.m2 * t2) / n
    a_out = np.empty(v_grid.size)
    g_out = np.empty(v_grid.size)
    for i, v in enumerate(v_grid):
        F, G = action_angle_rhs(chart, system, I, v + phase, t1, t2)
        a_out[i] = F.mean()
        g_out[i] = G.mean()
    return np.concatenate([a_out, g_out])


def resonance_coefficients(
    system: PerturbedSystem,
    chart: ActionAngleChart,
    idx: ResonanceIndex,
    I_res: float,
    epsilon: Optional[float] = None,
    gamma1=0.0,
    gamma2=0.0,
    profile: Optional[FrequencyProfile] = None,
    v_samples=16,
    torus_nodes=32,
    tol=1e-10,
    fd_step=None,
    max_nodes=512,
) -> ResonanceCoefficients:
    """Averaged coefficient functions at the resonance level by torus quadrature.

    A(v) and Q0(v) are averages of F and G over (theta1, theta2) in
    [0, 2 pi n)^2 with theta = v + (m1 theta1 + m2 theta2)/n.  Because the
    averages commute with d/dI, P0 = dA/dI, P1 = (1/2) d^2A/dI^2 and
    Q1 = dQ0/dI are taken by Richardson differences of the averaged samples.
    """
    chart.check_action(I_res)
    eps = system.epsilon if epsilon is None else float(epsilon)
    profile = profile or frequency_profile_from_chart(chart)
    lo, hi = chart.I_range
    step = fd_step or 2e-3 * (hi - lo)
    n = idx.n

    samples = v_samples
    while True:
        v_grid = sample_grid(n, samples)
        cache = {}

        def averaged(I):
            key = float(I)
            if key not in cache:
                cache[key] = _settled(
                    lambda m: _torus_coefficients(system, chart, idx, key, v_grid, m),
                    torus_nodes,
                    max_nodes,
                    tol,
                    "torus quadrature",
                )
            return cache[key]

        base = averaged(I_res)
        a_s, q_s = base[:samples], base[samples:]
        spec = np.abs(np.fft.rfft(np.concatenate([a_s, q_s]).reshape(2, samples), axis=1))
        top = spec[:, -2:].max()
        if top <= 1e-13 * max(spec.max(), 1e-300) or samples >= 256:
            break
        samples *= 2

    d1 = richardson_derivative(averaged, I_res, step, order=1, levels=3)
    d2 = richardson_derivative(averaged, I_res, step, order=2, levels=3)

    def series(vals):
        return TrigSeries.from_samples(vals, n, drop_below=1e-13)

    A = series(a_s)
    Q0 = series(q_s)
    P0 = series(d1[:samples])
    Q1 = series(d1[samples:])
    P1 = series(0.5 * d2[:samples])
    sigma_tilde = P0.tilde() + Q0.derivative()
    return ResonanceCoefficients(
        n=n,
        I_res=float(I_res),
        A_tilde=A.tilde(),
        P0_tilde=P0.tilde(),
        Q0=Q0,
        P1_tilde=P1.tilde(),
        Q1=Q1,
        sigma_tilde=sigma_tilde,
        B0_val=A.mean,
        B1_val=P0.mean,
        B2_val=P1.mean,
        b1=float(profile.b1(I_res)),
        b2=float(profile.b2(I_res)),
        b3=float(profile.b3(I_res)),
        mu=math.sqrt(eps),
        gamma1=float(gamma1),
        gamma2=float(gamma2),
        meta={"source": "torus-quadrature", "index": (idx.n, idx.m1, idx.m2), "v_samples": samples},
    )
