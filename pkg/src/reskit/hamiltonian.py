"""Unperturbed Hamiltonian structure: the perturbed model, action-angle charts,
the frequency profile and the pendulum's h <-> k <-> I bridges."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from ._numerics import richardson_derivative
from .special import EllipticDomainError, complete_elliptic_ke, elliptic_e_minus_kprime2_k

Field = Callable[..., np.ndarray]


class ChartDomainError(ValueError):
    """Action outside the open cell of closed orbits."""


class ConfigurationError(ValueError):
    """A model violates one of its structural assumptions."""


def check_incommensurable(omega1, omega2, max_denominator=64, tol=1e-9):
    """True when no p/q with q <= max_denominator matches omega1/omega2 within tol."""
    ratio = omega1 / omega2
    for q in range(1, max_denominator + 1):
        p = round(ratio * q)
        if p > 0 and abs(ratio - p / q) < tol:
            return False
    return True


def _nearest_rational(ratio, max_denominator=64):
    return Fraction(ratio).limit_denominator(max_denominator)


@dataclass(frozen=True)
class PerturbedSystem:
    """x' = H_y + eps g(x, y, th1, th2),  y' = -H_x + eps f(x, y, th1, th2).

    ``grad_hamiltonian`` (returning (H_x, H_y)) is optional; without it the
    gradient is taken by central differences.
    """

    hamiltonian: Field
    g_field: Field
    f_field: Field
    omega1: float
    omega2: float
    epsilon: float
    domain_kind: str = "plane"
    grad_hamiltonian: Optional[Callable] = None
    check_periodicity: bool = True

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigurationError(f"epsilon must be positive, got {self.epsilon}")
        if not (self.omega1 > 0 and self.omega2 > 0):
            raise ConfigurationError("forcing frequencies must be positive")
        if not check_incommensurable(self.omega1, self.omega2):
            frac = _nearest_rational(self.omega1 / self.omega2)
            raise ConfigurationError(
                f"omega1/omega2 = {self.omega1 / self.omega2!r} is numerically rational (~{frac})"
            )
        if self.domain_kind not in ("plane", "cylinder"):
            raise ConfigurationError(f"unknown domain kind {self.domain_kind!r}")
        if self.check_periodicity:
            self._spot_check_periodicity()

    def _spot_check_periodicity(self):
        rng = np.random.default_rng(12345)
        pts = rng.uniform(-1.0, 1.0, size=(2, 8))
        th = rng.uniform(0.0, 2 * np.pi, size=(2, 8))
        for fn in (self.g_field, self.f_field):
            base = np.asarray(fn(pts[0], pts[1], th[0], th[1]), dtype=float)
            for d1, d2 in ((2 * np.pi, 0.0), (0.0, 2 * np.pi)):
                shifted = np.asarray(fn(pts[0], pts[1], th[0] + d1, th[1] + d2), dtype=float)
                if not np.allclose(base, shifted, rtol=1e-9, atol=1e-12):
                    raise ConfigurationError("perturbation is not 2*pi-periodic in the forcing phases")

    def gradient(self, x, y):
        if self.grad_hamiltonian is not None:
            return self.grad_hamiltonian(x, y)
        h = 1e-6
        hx = (self.hamiltonian(x + h, y) - self.hamiltonian(x - h, y)) / (2 * h)
        hy = (self.hamiltonian(x, y + h) - self.hamiltonian(x, y - h)) / (2 * h)
        return hx, hy

    def averaged_fields(self, x, y, nodes=32):
        """(g0, f0): torus averages of g and f over both forcing phases."""
        t = 2 * np.pi * np.arange(nodes) / nodes
        t1, t2 = np.meshgrid(t, t, indexing="ij")
        xe = np.asarray(x, dtype=float)[..., None, None]
        ye = np.asarray(y, dtype=float)[..., None, None]
        g0 = np.mean(self.g_field(xe, ye, t1, t2) * np.ones_like(xe * t1), axis=(-2, -1))
        f0 = np.mean(self.f_field(xe, ye, t1, t2) * np.ones_like(xe * t1), axis=(-2, -1))
        return g0, f0

    def vector_field(self, t, x, y):
        hx, hy = self.gradient(x, y)
        th1, th2 = self.omega1 * t, self.omega2 * t
        return (
            hy + self.epsilon * self.g_field(x, y, th1, th2),
            -hx + self.epsilon * self.f_field(x, y, th1, th2),
        )


def _fd_theta(fn, step=1e-3):
    # theta is periodic and the charts are analytic: 4th-order stencil suffices
    def deriv(I, theta):
        theta = np.asarray(theta, dtype=float)
        return (
            fn(I, theta - 2 * step) - 8 * fn(I, theta - step) + 8 * fn(I, theta + step) - fn(I, theta + 2 * step)
        ) / (12 * step)

    return deriv


def _fd_action(fn, step, order=1):
    def deriv(I, theta):
        return richardson_derivative(lambda s: fn(s, theta), I, step, order=order, levels=3)

    return deriv


@dataclass(frozen=True)
class ActionAngleChart:
    """x = X(I, theta), y = Y(I, theta) on an open action interval.

    Derivative fields left as ``None`` are filled with Richardson-extrapolated
    central differences.  ``omega`` is the natural frequency omega(I);
    ``to_action_angle`` (optional) inverts the chart for trajectory projection.
    """

    x_of: Field
    y_of: Field
    I_range: tuple
    omega: Callable[[float], float]
    x_dI: Optional[Field] = None
    y_dI: Optional[Field] = None
    x_dtheta: Optional[Field] = None
    y_dtheta: Optional[Field] = None
    x_dII: Optional[Field] = None
    x_dItheta: Optional[Field] = None
    to_action_angle: Optional[Callable] = None
    profile: Optional["FrequencyProfile"] = None
    name: str = "chart"
    fd_step: float = field(default=0.0)

    def __post_init__(self):
        lo, hi = (float(v) for v in self.I_range)
        if not hi > lo:
            raise ConfigurationError("I_range must be an increasing interval")
        object.__setattr__(self, "I_range", (lo, hi))
        step = self.fd_step or 1e-5 * (hi - lo)
        object.__setattr__(self, "fd_step", step)
        if self.x_dI is None:
            object.__setattr__(self, "x_dI", _fd_action(self.x_of, step))
        if self.y_dI is None:
            object.__setattr__(self, "y_dI", _fd_action(self.y_of, step))
        if self.x_dtheta is None:
            object.__setattr__(self, "x_dtheta", _fd_theta(self.x_of))
        if self.y_dtheta is None:
            object.__setattr__(self, "y_dtheta", _fd_theta(self.y_of))
        if self.x_dII is None:
            object.__setattr__(self, "x_dII", _fd_action(self.x_of, step * 10, order=2))
        if self.x_dItheta is None:
            object.__setattr__(self, "x_dItheta", _fd_action(self.x_dtheta, step))

    def check_action(self, I):
        lo, hi = self.I_range
        I = np.asarray(I, dtype=float)
        if np.any(I <= lo) or np.any(I >= hi):
            raise ChartDomainError(f"action {I} outside the open cell ({lo}, {hi})")

    def canonicity_residual(self, I, theta):
        """x_theta y_I - x_I y_theta - 1; zero for a canonical chart."""
        return (
            self.x_dtheta(I, theta) * self.y_dI(I, theta)
            - self.x_dI(I, theta) * self.y_dtheta(I, theta)
            - 1.0
        )


@dataclass(frozen=True)
class FrequencyProfile:
    """omega(I) with b1 = omega', b2 = omega''/2, b3 = omega'''/6."""

    omega: Callable[[float], float]
    b1: Callable[[float], float]
    b2: Callable[[float], float]
    b3: Callable[[float], float]
    I_range: tuple

    def check_monotone(self, samples=64, rel_tol=1e-12):
        lo, hi = self.I_range
        grid = np.linspace(lo, hi, samples + 2)[1:-1]
        w = np.array([self.omega(float(s)) for s in grid])
        if np.any(w == 0) or np.any(np.sign(w) != np.sign(w[0])):
            raise ConfigurationError("natural frequency vanishes inside the cell")
        dw = np.diff(w)
        scale = max(np.max(np.abs(w)), 1e-300)
        if np.all(np.abs(dw) <= rel_tol * scale):
            raise ConfigurationError("natural frequency is constant on the cell (degenerate)")
        if not (np.all(dw > 0) or np.all(dw < 0)):
            raise ConfigurationError("natural frequency is not monotone on the cell")
        return 1 if dw[0] > 0 else -1


def frequency_profile_from_chart(chart: ActionAngleChart, step=None) -> FrequencyProfile:
    """Frequency profile for a chart.

    Charts carrying analytic derivatives (``chart.profile``) return them;
    otherwise b1, b2, b3 come from Richardson-extrapolated differences of
    omega(I).
    """
    if chart.profile is not None:
        return chart.profile
    lo, hi = chart.I_range
    h = step or 1e-3 * (hi - lo)
    omega = chart.omega

    def b1(I):
        return float(richardson_derivative(omega, float(I), h, order=1, levels=3))

    def b2(I):
        return 0.5 * float(richardson_derivative(omega, float(I), h, order=2, levels=3))

    def b3(I):
        return float(richardson_derivative(b2, float(I), h, order=1, levels=3)) / 3.0

    return FrequencyProfile(omega, b1, b2, b3, chart.I_range)


def action_angle_rhs(chart: ActionAngleChart, system: PerturbedSystem, I, theta, theta1, theta2):
    """(F, G) of the action-angle form I' = eps F, theta' = omega + eps G."""
    chart.check_action(I)
    x = chart.x_of(I, theta)
    y = chart.y_of(I, theta)
    f = system.f_field(x, y, theta1, theta2)
    g = system.g_field(x, y, theta1, theta2)
    F = f * chart.x_dtheta(I, theta) - g * chart.y_dtheta(I, theta)
    G = -f * chart.x_dI(I, theta) + g * chart.y_dI(I, theta)
    return F, G


def harmonic_oscillator_chart(I_range=(1e-3, 10.0)) -> ActionAngleChart:
    """H = (x^2 + y^2)/2: x = sqrt(2I) sin theta, y = sqrt(2I) cos theta, omega = 1."""

    def x_of(I, th):
        return np.sqrt(2 * I) * np.sin(th)

    def y_of(I, th):
        return np.sqrt(2 * I) * np.cos(th)

    zero = lambda I: 0.0  # noqa: E731
    profile = FrequencyProfile(lambda I: 1.0, zero, zero, zero, I_range)
    return ActionAngleChart(
        x_of,
        y_of,
        I_range,
        omega=lambda I: 1.0,
        x_dI=lambda I, th: np.sin(th) / np.sqrt(2 * I),
        y_dI=lambda I, th: np.cos(th) / np.sqrt(2 * I),
        x_dtheta=lambda I, th: np.sqrt(2 * I) * np.cos(th),
        y_dtheta=lambda I, th: -np.sqrt(2 * I) * np.sin(th),
        to_action_angle=lambda x, y: ((x * x + y * y) / 2, np.arctan2(x, y)),
        profile=profile,
        name="harmonic",
    )


# --- pendulum energy / modulus / action bridges -----------------------------

def h_to_k(h):
    """Pendulum energy h = y^2/2 - cos x  ->  modulus k = sqrt((1+h)/2)."""
    h = np.asarray(h, dtype=float)
    if np.any(h <= -1) or np.any(h >= 1):
        raise ChartDomainError(f"energy {h} outside the oscillation cell (-1, 1)")
    out = np.sqrt((1.0 + h) / 2.0)
    return float(out) if out.ndim == 0 else out


def k_to_h(k):
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0) or np.any(k >= 1):
        raise ChartDomainError(f"modulus {k} outside (0, 1)")
    out = 2.0 * k * k - 1.0
    return float(out) if out.ndim == 0 else out


PENDULUM_ACTION_MAX = 8.0 / math.pi


def k_to_action(k):
    """Pendulum action I(k) = (8/pi)[E(k) - (1 - k^2) K(k)], with I(0) = 0."""
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0) or np.any(k >= 1):
        raise ChartDomainError(f"modulus {k} outside (0, 1)")
    out = (8.0 / math.pi) * elliptic_e_minus_kprime2_k(k)
    return float(out) if np.ndim(out) == 0 else out


def dk_daction(k):
    """dk/dI = pi / (8 k K(k))."""
    return math.pi / (8.0 * k * complete_elliptic_ke(k)[0])


def action_to_k(I, tol=1e-15, max_iter=100):
    """Invert k_to_action by safeguarded Newton (bisection fallback)."""
    I = float(I)
    if not 0.0 < I < PENDULUM_ACTION_MAX:
        raise ChartDomainError(f"action {I} outside (0, 8/pi)")
    lo, hi = 0.0, 1.0
    k = min(math.sqrt(I / 2.0), 0.99)
    for _ in range(max_iter):
        try:
            kk = complete_elliptic_ke(k)[0]
        except EllipticDomainError:
            k = 0.5 * (lo + hi)
            continue
        r = k_to_action(k) - I
        if r > 0:
            hi = k
        else:
            lo = k
        step = r / ((8.0 / math.pi) * k * kk)
        new = k - step
        if not lo < new < hi:
            new = 0.5 * (lo + hi)
        if abs(new - k) <= tol * max(k, 1e-300):
            return new
        k = new
    raise ConfigurationError(f"action inversion did not converge for I={I}")
