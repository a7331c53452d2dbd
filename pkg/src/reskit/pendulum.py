"""Built-in reference system: a pendulum with quasi-periodic forcing,

    x'' + sin x = eps [(-1 + p1 cos 3x + p2 x alpha) x' + p3 alpha],
    alpha = cos(theta1) sin(theta2),

in its oscillation cell -1 < h < 1, parametrized by the modulus
k = sqrt((1 + h)/2).  The resonance used throughout is 3 omega = omega1 + omega2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Optional

import numpy as np

from .averaging import (
    DoubleRoot,
    GeneratingFunction,
    ResonanceCoefficients,
    ResonanceIndex,
    find_double_root,
    solve_resonance,
)
from .hamiltonian import (
    PENDULUM_ACTION_MAX,
    ActionAngleChart,
    ChartDomainError,
    ConfigurationError,
    FrequencyProfile,
    PerturbedSystem,
    action_to_k,
    k_to_action,
)
from .dynamics import FULL, AveragedModel
from .series import TrigSeries
from .special import (
    _carlson_rf,
    complete_elliptic_ke,
    jacobi_sn_cn_dn,
    nome,
    nome_odd_series,
)

PENDULUM_INDEX = ResonanceIndex(3, 1, 1)
QUADRATURE_NODES = 1024


def _check_k(k):
    k = float(k)
    if not 0.0 < k < 1.0:
        raise ChartDomainError(f"modulus {k} outside the oscillation cell (0, 1)")
    return k


# ---------------------------------------------------------------------------
# closed forms in the modulus
# ---------------------------------------------------------------------------

def pendulum_omega(k):
    """Natural frequency omega(k) = pi / (2 K(k))."""
    return math.pi / (2.0 * complete_elliptic_ke(_check_k(k))[0])


def pendulum_frequency_derivatives(k):
    """(b1, b2, b3) = (omega', omega''/2, omega'''/6) with respect to the action."""
    k = _check_k(k)
    K, E = complete_elliptic_ke(k)
    k2 = k * k
    pi = math.pi
    b1 = pi ** 2 / 16 * ((k2 - 1) * K + E) / (k2 * (k2 - 1) * K ** 3)
    b2 = -(pi ** 3) / 256 * ((k2 - 1) * K ** 2 - 2 * (k2 - 2) * K * E - 3 * E ** 2) / (
        k2 ** 2 * (k2 - 1) ** 2 * K ** 5
    )
    b3 = pi ** 4 / 6144 * (
        (k2 ** 2 + 2 * k2 - 3) * K ** 3
        - (2 * k2 ** 2 + 3 * k2 - 13) * K ** 2 * E
        + 5 * (k2 - 5) * K * E ** 2
        + 15 * E ** 3
    ) / (k2 ** 3 * (k2 - 1) ** 3 * K ** 7)
    return b1, b2, b3


def pendulum_b0(k, p1):
    """Generating function of the autonomous part as a function of the modulus."""
    k = _check_k(k)
    K, E = complete_elliptic_ke(k)
    k2 = k * k
    return (8.0 / (105.0 * math.pi)) * (
        (1 - k2) * (105 + (128 * k2 * k2 - 80 * k2 + 3) * p1) * K
        + (-105 + (2 * k2 - 1) * (128 * k2 * k2 - 128 * k2 + 3) * p1) * E
    )


def pendulum_b1_b2(k, p1):
    """(B1, B2) = (dB0/dI, (1/2) d^2B0/dI^2) in closed form."""
    k = _check_k(k)
    K, E = complete_elliptic_ke(k)
    k2 = k * k
    b1 = -(15 + (128 * k2 * k2 - 144 * k2 + 31) * p1 - (256 * k2 * k2 - 256 * k2 + 46) * p1 * E / K) / 15
    b2 = p1 * math.pi / (120 * k2 * (1 - k2) * K ** 3) * (
        (384 * k2 ** 3 - 656 * k2 ** 2 + 295 * k2 - 23) * K ** 2
        - (768 * k2 ** 3 - 1280 * k2 ** 2 + 558 * k2 - 46) * K * E
        - (128 * k2 ** 2 - 128 * k2 + 23) * E ** 2
    )
    return b1, b2


def pendulum_generating_function(p1) -> GeneratingFunction:
    """B0, B1, B2 of the closed forms, as functions of the action."""
    return GeneratingFunction(
        b0=lambda I: pendulum_b0(action_to_k(I), p1),
        b1=lambda I: pendulum_b1_b2(action_to_k(I), p1)[0],
        b2=lambda I: pendulum_b1_b2(action_to_k(I), p1)[1],
        I_range=(0.0, PENDULUM_ACTION_MAX),
    )


def modulus_generating_function(p1):
    # generating function in the modulus coordinate; dk/dI > 0 on the cell,
    # so double roots in k and in I coincide
    return GeneratingFunction(
        b0=lambda k: pendulum_b0(k, p1),
        b1=lambda k: pendulum_b1_b2(k, p1)[0],
        b2=lambda k: pendulum_b1_b2(k, p1)[1],
        I_range=(0.0, 1.0),
    )


def find_pendulum_double_root(k_guess=0.759, k_range=(0.05, 0.99), n_scan=256):
    """(p1*, k*, B2) where B0 = B1 = 0; B0 is affine in p1, so p1 is eliminated exactly.

    Among all double roots in ``k_range`` the one nearest ``k_guess`` is
    returned (the family has further, spurious solutions close to k = 1).
    """
    root: DoubleRoot = find_double_root(modulus_generating_function, k_range, u_guess=k_guess, affine=True, n_scan=n_scan)
    return root.p, root.u, pendulum_b1_b2(root.u, root.p)[1]


@lru_cache(maxsize=1)
def bifurcation_point():
    """(p1*, k*, B2) of the double cycle, computed once per process."""
    return find_pendulum_double_root()


def pendulum_resonance_setup(omega1=1.0):
    """(k_res, omega2): with k_res = k*, omega2 = 3 omega(k*) - omega1."""
    _, k_star, _ = bifurcation_point()
    return k_star, 3.0 * pendulum_omega(k_star) - omega1


# ---------------------------------------------------------------------------
# the chart and its derivatives
# ---------------------------------------------------------------------------

def _weights_d(j, a):
    q = a ** (2 * j - 1)
    return a ** (j - 0.5) * (1 - q) / (1 + q) ** 2


def _weights_e(j, a):
    q = a ** (2 * j - 1)
    return a ** (j - 0.5) * (1 - 6 * q + q * q) / (1 + q) ** 3


@dataclass(frozen=True)
class PendulumKernels:
    """x, y and their theta/action derivatives on one orbit, sampled over theta."""

    k: float
    x: np.ndarray
    y: np.ndarray
    x_t: np.ndarray
    y_t: np.ndarray
    x_I: np.ndarray
    y_I: np.ndarray
    x_tI: np.ndarray
    x_II: np.ndarray
    x_tII: np.ndarray
    y_II: np.ndarray


def pendulum_kernels(k, theta) -> PendulumKernels:
    """Orbit functions at modulus k.

    x, y and their theta-derivatives come from the Jacobi functions directly;
    the action derivatives of x use the nome Fourier series, and those of y
    follow from y = omega x_theta.
    """
    k = _check_k(k)
    theta = np.asarray(theta, dtype=float)
    K, E = complete_elliptic_ke(k)
    w = math.pi / (2 * K)
    b1, b2, _ = pendulum_frequency_derivatives(k)
    sn, cn, dn = jacobi_sn_cn_dn(2 * K * theta / math.pi, k)
    x = 2 * np.arcsin(k * sn)
    y = 2 * k * cn
    x_t = (4 * k * K / math.pi) * cn
    y_t = -(4 * k * K / math.pi) * sn * dn

    c1 = math.pi ** 3 / (4 * k * k * (1 - k * k) * K ** 3)
    d_sin = nome_odd_series(k, theta, _weights_d, "sin")
    d_cos = nome_odd_series(k, theta, lambda j, a: (2 * j - 1) * _weights_d(j, a), "cos")
    x_I = c1 * d_sin
    x_tI = c1 * d_cos

    c2 = math.pi ** 4 / (32 * k ** 4 * (1 - k * k) ** 2 * K ** 5)
    lam = (1 + k * k) * K - 3 * E
    mu = math.pi ** 2 / (4 * K)
    e_sin = nome_odd_series(k, theta, lambda j, a: (2 * j - 1) * _weights_e(j, a), "sin")
    e_cos = nome_odd_series(k, theta, lambda j, a: (2 * j - 1) ** 2 * _weights_e(j, a), "cos")
    x_II = c2 * (lam * d_sin + mu * e_sin)
    x_tII = c2 * (lam * d_cos + mu * e_cos)

    y_I = b1 * x_t + w * x_tI
    y_II = 2 * b2 * x_t + 2 * b1 * x_tI + w * x_tII
    return PendulumKernels(k, x, y, x_t, y_t, x_I, y_I, x_tI, x_II, x_tII, y_II)


@lru_cache(maxsize=4096)
def _k_of_action(I):
    return action_to_k(I)


def _kernel_field(name):
    def fn(I, theta):
        return getattr(pendulum_kernels(_k_of_action(float(I)), theta), name)

    return fn


def pendulum_to_action_angle(x, y):
    """Project phase points of the oscillation cell onto (I, theta).

    sn = sin(x/2)/k and cn = y/(2k) fix the amplitude phi; theta is
    pi F(phi, k) / (2K) with F continued past |phi| = pi/2 by 2K per half turn.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    h = 0.5 * y * y - np.cos(x)
    if np.any(h <= -1) or np.any(h >= 1):
        raise ChartDomainError("phase point outside the oscillation cell")
    k = np.sqrt((1 + h) / 2)
    phi = np.arctan2(np.sin(x / 2) / k, y / (2 * k))
    K = np.asarray(complete_elliptic_ke(np.atleast_1d(k))[0]).reshape(k.shape)
    m = np.round(phi / np.pi)
    red = phi - m * np.pi
    s = np.sin(red)
    f = s * _carlson_rf(np.cos(red) ** 2, 1 - (k * s) ** 2, 1.0) + 2 * m * K
    theta = np.mod(math.pi * f / (2 * K), 2 * math.pi)
    return k_to_action(k), theta


def pendulum_profile() -> FrequencyProfile:
    def comp(i):
        return lambda I: pendulum_frequency_derivatives(_k_of_action(float(I)))[i]

    return FrequencyProfile(
        omega=lambda I: pendulum_omega(_k_of_action(float(I))),
        b1=comp(0),
        b2=comp(1),
        b3=comp(2),
        I_range=(0.0, PENDULUM_ACTION_MAX),
    )


def pendulum_chart() -> ActionAngleChart:
    """x = 2 arcsin(k sn(2K theta/pi, k)), y = 2k cn(2K theta/pi, k), I in (0, 8/pi)."""
    return ActionAngleChart(
        x_of=_kernel_field("x"),
        y_of=_kernel_field("y"),
        I_range=(0.0, PENDULUM_ACTION_MAX),
        omega=lambda I: pendulum_omega(_k_of_action(float(I))),
        x_dI=_kernel_field("x_I"),
        y_dI=_kernel_field("y_I"),
        x_dtheta=_kernel_field("x_t"),
        y_dtheta=_kernel_field("y_t"),
        x_dII=_kernel_field("x_II"),
        x_dItheta=_kernel_field("x_tI"),
        to_action_angle=pendulum_to_action_angle,
        profile=pendulum_profile(),
        name="pendulum",
    )


# ---------------------------------------------------------------------------
# the forced system
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PendulumParams:
    p1: float
    p2: float
    p3: float
    omega1: float
    omega2: float
    epsilon: float

    def __post_init__(self):
        for name in ("p1", "p2", "p3", "omega1", "omega2", "epsilon"):
            val = getattr(self, name)
            if not math.isfinite(float(val)):
                raise ConfigurationError(f"{name} must be finite")
            object.__setattr__(self, name, float(val))
        if self.p2 < 0:
            raise ConfigurationError("p2 must be >= 0")
        if not self.p3 > 0:
            raise ConfigurationError("p3 must be > 0")
        if not self.epsilon > 0:
            raise ConfigurationError("epsilon must be > 0")

    @classmethod
    def at_bifurcation(cls, p2=0.0, p3=1.0, epsilon=1e-3, omega1=1.0):
        """p1 = p1* and omega2 tuned so the 3:(1,1) resonance sits at k*."""
        p1, _, _ = bifurcation_point()
        _, omega2 = pendulum_resonance_setup(omega1)
        return cls(p1, p2, p3, omega1, omega2, epsilon)


def pendulum_system(params: PendulumParams) -> PerturbedSystem:
    p1, p2, p3 = params.p1, params.p2, params.p3

    def f_field(x, y, t1, t2):
        alpha = np.cos(t1) * np.sin(t2)
        return (-1.0 + p1 * np.cos(3 * x) + p2 * x * alpha) * y + p3 * alpha

    def g_field(x, y, t1, t2):
        return np.zeros(np.broadcast(x, y, t1, t2).shape)

    return PerturbedSystem(
        hamiltonian=lambda x, y: 0.5 * y * y - np.cos(x),
        g_field=g_field,
        f_field=f_field,
        omega1=params.omega1,
        omega2=params.omega2,
        epsilon=params.epsilon,
        domain_kind="cylinder",
        grad_hamiltonian=lambda x, y: (np.sin(x), y),
    )


def pendulum_resonance_k(params: PendulumParams, idx: ResonanceIndex = PENDULUM_INDEX):
    I = solve_resonance(pendulum_profile(), idx, params.omega1, params.omega2)
    return action_to_k(I)


# ---------------------------------------------------------------------------
# averaged-system coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PendulumCoefficients:
    """Scalar coefficients of the 3:(1,1) resonance-zone model at modulus k.

    The v-dependence is
        A~ = p3 A1 sin 3v + p2 A2 cos 3v,    P0~ = p3 P01 sin 3v + p2 P02 cos 3v,
        Q0 = p3 Q01 cos 3v + p2 Q02 sin 3v,  P1~ = p3 P11 sin 3v + p2 P12 cos 3v,
        Q1 = p3 Q11 cos 3v + p2 Q12 sin 3v,  sigma~ = p2 sigma cos 3v.
    """

    k: float
    A1_tilde: float
    A2_tilde: float
    sigma_tilde: float
    P01_tilde: float
    P02_tilde: float
    P11_tilde: float
    P12_tilde: float
    Q01: float
    Q02: float
    Q11: float
    Q12: float
    B0: float
    B1: float
    B2: float
    b1: float
    b2: float
    b3: float


def nome_coefficients(k):
    """Closed forms (A1, sigma, P01, P11) of the p3 and sigma terms."""
    k = _check_k(k)
    K, E = complete_elliptic_ke(k)
    a = nome(k)
    a32 = a ** 1.5
    a3 = a ** 3
    A1 = -2 * a32 / (1 + a3)
    sigma = 2 * a32 / (3 * (1 + a3))
    P01 = math.pi ** 3 / (16 * k * k * (1 - k * k) * K ** 3) * 3 * a32 * (a3 - 1) / (1 + a3) ** 2
    P11 = (
        math.pi ** 4
        / (1024 * k ** 4 * (1 - k * k) ** 2 * K ** 6)
        * 3 * a32 / (1 + a3) ** 3
        * (4 * ((1 + k * k) * K - 3 * E) * K * (a3 * a3 - 1) - 3 * math.pi ** 2 * (a3 * a3 - 6 * a3 + 1))
    )
    return A1, sigma, P01, P11


def _p2_integrals(k, nodes):
    th = 2 * np.pi * np.arange(nodes) / nodes
    kn = pendulum_kernels(k, th)
    s3, c3 = np.sin(3 * th), np.cos(3 * th)
    x, y, xt = kn.x, kn.y, kn.x_t
    xyxt_I = kn.x_I * y * xt + x * kn.y_I * xt + x * y * kn.x_tI
    xyxt_II = (
        kn.x_II * y * xt
        + x * kn.y_II * xt
        + x * y * kn.x_tII
        + 2 * (kn.x_I * kn.y_I * xt + kn.x_I * y * kn.x_tI + x * kn.y_I * kn.x_tI)
    )
    xyxI_I = kn.x_I * y * kn.x_I + x * kn.y_I * kn.x_I + x * y * kn.x_II
    # (1/4pi) int_0^{2pi} = mean / 2
    return np.array(
        [
            np.mean(x * y * xt * s3) / 2,
            np.mean(xyxt_I * s3) / 2,
            np.mean(xyxt_II * s3) / 4,
            np.mean(x * y * kn.x_I * c3) / 2,
            np.mean(xyxI_I * c3) / 2,
        ]
    )


def p2_coefficients(k, nodes=QUADRATURE_NODES, tol=1e-13):
    """(A2, P02, P12, Q02, Q12) by periodic trapezoid quadrature over one orbit.

    The integrands are the exact action derivatives of x y x_theta and
    x y x_I, including the terms coming from the action dependence of omega.
    """
    k = _check_k(k)
    coarse = _p2_integrals(k, nodes)
    fine = _p2_integrals(k, 2 * nodes)
    if np.max(np.abs(fine - coarse)) > tol * max(1.0, np.max(np.abs(fine))):
        raise ConfigurationError(f"orbit quadrature did not settle at k={k}")
    return tuple(float(v) for v in fine)


def pendulum_coefficients(k, params: PendulumParams) -> PendulumCoefficients:
    k = _check_k(k)
    A1, sigma, P01, P11 = nome_coefficients(k)
    A2, P02, P12, Q02, Q12 = p2_coefficients(k)
    B1, B2 = pendulum_b1_b2(k, params.p1)
    b1, b2, b3 = pendulum_frequency_derivatives(k)
    return PendulumCoefficients(
        k=k,
        A1_tilde=A1,
        A2_tilde=A2,
        sigma_tilde=sigma,
        P01_tilde=P01,
        P02_tilde=P02,
        P11_tilde=P11,
        P12_tilde=P12,
        Q01=P01 / 3,
        Q02=Q02,
        Q11=2 * P11 / 3,
        Q12=Q12,
        B0=pendulum_b0(k, params.p1),
        B1=B1,
        B2=B2,
        b1=b1,
        b2=b2,
        b3=b3,
    )


def pendulum_resonance_coefficients(
    params: PendulumParams,
    gamma1=0.0,
    gamma2=0.0,
    k: Optional[float] = None,
    B2_override: Optional[float] = None,
) -> ResonanceCoefficients:
    """Resonance-zone coefficients assembled from the closed forms.

    ``B2_override`` replaces B2 (the only way to realize B2 = 0 or to tune its
    size while keeping every other coefficient of the example).
    """
    k = pendulum_resonance_k(params) if k is None else _check_k(k)
    c = pendulum_coefficients(k, params)
    p2, p3 = params.p2, params.p3
    h = TrigSeries.harmonic
    n = PENDULUM_INDEX.n
    return ResonanceCoefficients(
        n=n,
        I_res=k_to_action(k),
        A_tilde=h(n, cos_amp=p2 * c.A2_tilde, sin_amp=p3 * c.A1_tilde),
        P0_tilde=h(n, cos_amp=p2 * c.P02_tilde, sin_amp=p3 * c.P01_tilde),
        Q0=h(n, cos_amp=p3 * c.Q01, sin_amp=p2 * c.Q02),
        P1_tilde=h(n, cos_amp=p2 * c.P12_tilde, sin_amp=p3 * c.P11_tilde),
        Q1=h(n, cos_amp=p3 * c.Q11, sin_amp=p2 * c.Q12),
        sigma_tilde=h(n, cos_amp=p2 * c.sigma_tilde),
        B0_val=c.B0,
        B1_val=c.B1,
        B2_val=c.B2 if B2_override is None else float(B2_override),
        b1=c.b1,
        b2=c.b2,
        b3=c.b3,
        mu=math.sqrt(params.epsilon),
        gamma1=float(gamma1),
        gamma2=float(gamma2),
        meta={"source": "pendulum-closed-form", "k": k, "B2_override": B2_override},
    )


def pendulum_averaged_model(params: PendulumParams, gamma1=0.0, gamma2=0.0, form=FULL,
                            B2_override: Optional[float] = None) -> AveragedModel:
    rc = pendulum_resonance_coefficients(params, gamma1, gamma2, B2_override=B2_override)
    return AveragedModel(rc, form)


def with_overrides(coeffs: ResonanceCoefficients, **changes) -> ResonanceCoefficients:
    """Copy of ``coeffs`` with scalar fields replaced (e.g. B2_val, gamma1, mu)."""
    return replace(coeffs, **changes)
