import math

import numpy as np
import pytest
from conftest import synthetic_coeffs
from hypothesis import given, settings
from hypothesis import strategies as st

from reskit.dynamics import (
    FULL,
    SYMMETRIC,
    AveragedModel,
    PreconditionError,
    classify_jacobian,
    find_equilibria,
    integrate,
    integrate_batch,
    leading_order_kind,
)
from reskit.pendulum import PendulumParams, pendulum_resonance_coefficients
from reskit.series import TrigSeries

h = TrigSeries.harmonic


def rich(mu=0.1, **kw):
    """A model with every series and scalar switched on."""
    base = dict(b2=0.4, b3=-0.2, B2=0.7, P0_tilde=h(3, 0.3, 1.1), Q0=h(3, 0.5, -0.2), P1_tilde=h(3, -0.4, 0.6),
                Q1=h(3, 0.25, 0.15), sigma_tilde=h(3, 0.35, 0.0))
    base.update(kw)
    return synthetic_coeffs(mu=mu, **base)


@pytest.fixture(scope="module")
def pendulum_symmetric():
    return AveragedModel(pendulum_resonance_coefficients(PendulumParams.at_bifurcation(epsilon=0.01)), SYMMETRIC)


def test_mu_zero_truncation():
    m = AveragedModel(rich(mu=0.0, B0=0.2, B1=0.1, gamma1=1.0), FULL)
    v = np.linspace(0, 2, 7)
    u = np.linspace(-1, 1, 7)
    du, dv = m.rhs(v, u)
    assert np.allclose(du, np.sin(3 * v) + 0.2)
    assert np.allclose(dv, -0.5 * u)


def test_full_form_polynomial_terms():
    c = rich(B0=0.2, B1=0.1, gamma1=0.5, gamma2=-1.0)
    m = AveragedModel(c, FULL)
    v, u, mu, r = 0.37, 0.8, c.mu, c.b2 / c.b1
    du, dv = m.rhs(v, u)
    exp_du = (c.A_tilde(v) + c.B0_val + mu * c.gamma1 - mu * mu / c.b1 * c.P0_tilde(v) * c.Q0(v)
              + mu * (c.sigma_tilde(v) + c.B1_val + mu * c.gamma2) * u
              + mu * mu * (c.P1_tilde(v) + c.B2_val + r * c.Q0.derivative()(v)) * u * u)
    exp_dv = (c.b1 + mu * mu * (c.Q1(v) - 2 * r * c.Q0(v))) * u + mu * c.b2 * u * u + mu * mu * c.b3 * u ** 3
    assert du == pytest.approx(exp_du, rel=1e-14)
    assert dv == pytest.approx(exp_dv, rel=1e-14)


def test_symmetric_form_uses_m_and_n():
    c = rich(sigma_tilde=TrigSeries.zero(3))
    m = AveragedModel(c, SYMMETRIC)
    v, u, mu = 1.1, -0.6, c.mu
    du, dv = m.rhs(v, u)
    assert du == pytest.approx(c.A_tilde(v) + mu * mu / c.b1 * m.N()(v) + mu * mu * c.b1 * m.M()(v) * u * u)
    assert dv == pytest.approx(c.b1 * u)


def test_form_preconditions():
    with pytest.raises(PreconditionError):
        AveragedModel(rich(gamma1=0.1), SYMMETRIC)
    with pytest.raises(PreconditionError):
        AveragedModel(rich(B0=1e-3), SYMMETRIC)
    with pytest.raises(PreconditionError):
        AveragedModel(rich(b1=0.0), FULL)
    with pytest.raises(PreconditionError):
        AveragedModel(rich(), "other")


def test_reversibility():
    m = AveragedModel(rich(sigma_tilde=TrigSeries.zero(3)), SYMMETRIC)
    assert m.is_reversible
    assert not AveragedModel(rich(), SYMMETRIC).is_reversible
    v = np.linspace(0, 2, 11)
    u = np.linspace(0.1, 1.5, 11)
    du_p, dv_p = m.rhs(v, u)
    du_m, dv_m = m.rhs(v, -u)
    assert np.allclose(du_p, du_m) and np.allclose(dv_p, -dv_m)


def test_time_reversed_orbit_retraces(pendulum_symmetric):
    m = pendulum_symmetric
    tr = integrate(m, 0.3, 0.2 * m.u_scale(), 20.0, rtol=1e-12, atol=1e-12)
    back = integrate(m, tr.v[-1], -tr.u[-1], 20.0, rtol=1e-12, atol=1e-12)
    assert back.v[-1] == pytest.approx(0.3, abs=1e-8)
    assert -back.u[-1] == pytest.approx(0.2 * m.u_scale(), abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 2 * math.pi / 3), st.floats(-2, 2))
def test_jacobian_by_differences(v, u):
    m = AveragedModel(rich(), FULL)
    jac = m.jacobian(v, u)
    d = 1e-6
    for col, (dv_, du_) in enumerate(((d, 0.0), (0.0, d))):
        fp = m.rhs(v + dv_, u + du_)
        fm = m.rhs(v - dv_, u - du_)
        # state order (v, u); rhs returns (du, dv)
        assert jac[0, col] == pytest.approx((fp[1] - fm[1]) / (2 * d), abs=1e-7)
        assert jac[1, col] == pytest.approx((fp[0] - fm[0]) / (2 * d), abs=1e-7)


def test_classify_jacobian():
    assert classify_jacobian(np.array([[0.0, 1.0], [1.0, 0.0]])) == "saddle"
    assert classify_jacobian(np.array([[0.0, 1.0], [-1.0, 0.0]])) == "center"
    assert classify_jacobian(np.array([[-0.1, 1.0], [-1.0, 0.0]])) == "stable_focus"
    assert classify_jacobian(np.array([[0.1, 1.0], [-1.0, 0.0]])) == "unstable_focus"
    assert classify_jacobian(np.array([[-2.0, 0.0], [0.0, -1.0]])) == "stable_node"


def test_pendulum_equilibria(pendulum_symmetric):
    m = pendulum_symmetric
    eq = find_equilibria(m)
    assert len(eq) == 2
    kinds = sorted(e.kind for e in eq)
    assert kinds == ["center", "saddle"]
    for e in eq:
        assert abs(e.u) < 1e-10
        assert leading_order_kind(m, e.v) == e.kind
        assert m.coeffs.A_tilde(e.v) == pytest.approx(0.0, abs=1e-12)


def test_equilibria_shift_with_detuning():
    # constant B0 moves the zeros of A~ + B0 along v and keeps u = 0
    m = AveragedModel(synthetic_coeffs(B0=0.5, mu=0.0), FULL)
    eq = find_equilibria(m, u_window=1.0)
    assert len(eq) == 2
    for e in eq:
        assert math.sin(3 * e.v) == pytest.approx(-0.5, abs=1e-10)
    assert find_equilibria(AveragedModel(synthetic_coeffs(B0=1.5, mu=0.0), FULL), u_window=1.0) == []


def test_energy_drift_scales_with_mu_squared():
    drifts = []
    for mu in (0.1, 0.05):
        m = AveragedModel(rich(mu=mu, sigma_tilde=TrigSeries.zero(3)), SYMMETRIC)
        tr = integrate(m, 0.2, 0.3, 10.0, rtol=1e-12, atol=1e-12)
        E = m.energy(tr.v, tr.u)
        drifts.append(np.max(np.abs(E - E[0])))
    assert 3.0 < drifts[0] / drifts[1] < 5.0


def test_batch_matches_single(pendulum_symmetric):
    m = pendulum_symmetric
    U = m.u_scale()
    v0 = np.array([0.1, 0.5, 1.2])
    u0 = np.array([0.3, 1.5, -2.5]) * U
    t, v, u, esc = integrate_batch(m, v0, u0, 5.0, u_limit=2.7 * U, rtol=1e-11, atol=1e-12)
    for i in range(3):
        one = integrate(m, v0[i], u0[i], 5.0, u_limit=2.7 * U)
        assert esc[i] == one.escaped
        if not one.escaped:
            assert v[-1, i] == pytest.approx(one.v[-1], abs=1e-6)
            assert u[-1, i] == pytest.approx(one.u[-1], abs=1e-6)
    assert esc[2]
