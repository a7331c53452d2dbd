import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import ellipk

from reskit.hamiltonian import (
    PENDULUM_ACTION_MAX,
    ActionAngleChart,
    ChartDomainError,
    ConfigurationError,
    FrequencyProfile,
    PerturbedSystem,
    action_angle_rhs,
    action_to_k,
    check_incommensurable,
    dk_daction,
    frequency_profile_from_chart,
    h_to_k,
    harmonic_oscillator_chart,
    k_to_action,
    k_to_h,
)
from reskit.pendulum import PendulumParams, pendulum_chart, pendulum_omega, pendulum_system

OMEGA2 = 1.4482208150489941


def pendulum_energy(x, y):
    return 0.5 * y * y - np.cos(x)


def zero_field(x, y, t1, t2):
    return np.zeros(np.broadcast(x, y, t1, t2).shape)


def test_incommensurability_check():
    assert check_incommensurable(1.0, OMEGA2)
    assert not check_incommensurable(1.0, 1.5)
    assert not check_incommensurable(2.0, 2.0 / 63.0 * 64.0)


def test_perturbed_system_validation():
    kw = dict(hamiltonian=pendulum_energy, g_field=zero_field, f_field=zero_field)
    with pytest.raises(ConfigurationError):
        PerturbedSystem(**kw, omega1=1.0, omega2=OMEGA2, epsilon=0.0)
    with pytest.raises(ConfigurationError):
        PerturbedSystem(**kw, omega1=1.0, omega2=2.0, epsilon=1e-3)
    with pytest.raises(ConfigurationError):
        PerturbedSystem(**kw, omega1=-1.0, omega2=OMEGA2, epsilon=1e-3)
    with pytest.raises(ConfigurationError):
        PerturbedSystem(**kw, omega1=1.0, omega2=OMEGA2, epsilon=1e-3, domain_kind="torus")


def test_nonperiodic_forcing_rejected():
    def f(x, y, t1, t2):
        return t1 * y

    with pytest.raises(ConfigurationError):
        PerturbedSystem(pendulum_energy, zero_field, f, 1.0, OMEGA2, 1e-3)


def test_default_gradient_by_differences():
    sys_ = PerturbedSystem(pendulum_energy, zero_field, zero_field, 1.0, OMEGA2, 1e-3)
    hx, hy = sys_.gradient(0.4, -0.3)
    assert hx == pytest.approx(math.sin(0.4), abs=1e-8)
    assert hy == pytest.approx(-0.3, abs=1e-8)


def test_h_k_bridges():
    assert h_to_k(0.0) == pytest.approx(1 / math.sqrt(2), rel=1e-15)
    assert h_to_k(-1 + 1e-9) == pytest.approx(math.sqrt(5e-10), rel=1e-6)
    for h in (-0.5, 0.0, 0.5):
        assert k_to_h(h_to_k(h)) == pytest.approx(h, abs=1e-15)
    for bad in (-1.0, 1.0, 2.0):
        with pytest.raises(ChartDomainError):
            h_to_k(bad)
    with pytest.raises(ChartDomainError):
        k_to_h(1.0)


def test_action_limits_and_round_trip():
    assert k_to_action(1e-6) < 1e-10
    assert k_to_action(1 - 1e-12) == pytest.approx(PENDULUM_ACTION_MAX, rel=1e-9)
    assert action_to_k(k_to_action(0.759)) == pytest.approx(0.759, abs=1e-10)
    with pytest.raises(ChartDomainError):
        action_to_k(PENDULUM_ACTION_MAX)


@given(st.floats(min_value=0.01, max_value=0.999))
def test_action_round_trip_property(k):
    assert action_to_k(k_to_action(k)) == pytest.approx(k, abs=1e-12)


def test_dI_dh_is_inverse_frequency():
    k = 0.5
    h = k_to_h(k)
    d = 1e-6
    dI_dh = (k_to_action(h_to_k(h + d)) - k_to_action(h_to_k(h - d))) / (2 * d)
    assert dI_dh == pytest.approx(1 / pendulum_omega(k), abs=1e-8)
    # chain rule factor dk/dI = pi/(8 k K)
    assert dk_daction(k) == pytest.approx(math.pi / (8 * k * ellipk(k * k)), rel=1e-13)


def test_pendulum_frequency_shape():
    ks = np.linspace(0.01, 0.99, 50)
    w = np.array([pendulum_omega(k) for k in ks])
    assert np.all(np.diff(w) < 0)
    assert pendulum_omega(1e-8) == pytest.approx(1.0, abs=1e-12)
    assert pendulum_omega(1 - 1e-15) < 0.2


@pytest.mark.parametrize("k", [0.3, 0.5, 0.759])
def test_pendulum_chart_energy_and_canonicity(k):
    chart = pendulum_chart()
    I = k_to_action(k)
    th = np.linspace(0, 2 * np.pi, 41)
    h = pendulum_energy(chart.x_of(I, th), chart.y_of(I, th))
    assert np.max(np.abs(h - (2 * k * k - 1))) < 1e-10
    assert np.max(np.abs(chart.canonicity_residual(I, th))) < 1e-8


def test_chart_is_periodic_in_theta():
    chart = pendulum_chart()
    I = k_to_action(0.6)
    th = np.linspace(0, 3, 9)
    assert np.allclose(chart.x_of(I, th + 2 * np.pi), chart.x_of(I, th), atol=1e-12)
    assert np.allclose(chart.y_of(I, th + 2 * np.pi), chart.y_of(I, th), atol=1e-12)


def test_chart_domain_is_open():
    chart = pendulum_chart()
    with pytest.raises(ChartDomainError):
        chart.check_action(0.0)
    with pytest.raises(ChartDomainError):
        chart.check_action(PENDULUM_ACTION_MAX)


def test_chart_inverse_round_trip():
    chart = pendulum_chart()
    I = k_to_action(0.759)
    th = np.linspace(0.1, 6.2, 30)
    I2, th2 = chart.to_action_angle(chart.x_of(I, th), chart.y_of(I, th))
    assert np.allclose(I2, I, atol=1e-12)
    assert np.allclose(th2, th, atol=1e-10)


def test_harmonic_profile_is_flat():
    prof = frequency_profile_from_chart(harmonic_oscillator_chart())
    assert (prof.b1(1.0), prof.b2(1.0), prof.b3(1.0)) == (0.0, 0.0, 0.0)
    with pytest.raises(ConfigurationError):
        prof.check_monotone()


def test_generic_profile_by_differences_matches_closed_form():
    # strip the analytic profile: b1..b3 then come from differences of omega(I)
    base = pendulum_chart()
    chart = ActionAngleChart(base.x_of, base.y_of, base.I_range, base.omega)
    prof = frequency_profile_from_chart(chart)
    exact = base.profile
    I = k_to_action(0.5)
    assert prof.b1(I) == pytest.approx(exact.b1(I), abs=1e-7)
    assert prof.b2(I) == pytest.approx(exact.b2(I), abs=1e-6)
    assert prof.b3(I) == pytest.approx(exact.b3(I), abs=1e-6)


def test_generic_chart_derivatives_by_differences():
    chart = ActionAngleChart(lambda I, t: np.sqrt(2 * I) * np.sin(t), lambda I, t: np.sqrt(2 * I) * np.cos(t),
                             (1e-3, 10.0), omega=lambda I: 1.0)
    exact = harmonic_oscillator_chart()
    I, th = 1.3, np.linspace(0, 6, 7)
    for name in ("x_dI", "y_dI", "x_dtheta", "y_dtheta"):
        assert np.allclose(getattr(chart, name)(I, th), getattr(exact, name)(I, th), atol=1e-8)
    assert np.max(np.abs(chart.canonicity_residual(I, th))) < 1e-8


def test_monotone_check_flags_turning_point():
    prof = FrequencyProfile(lambda I: 1 + (I - 1) ** 2, None, None, None, (0.0, 2.0))
    with pytest.raises(ConfigurationError):
        prof.check_monotone()
    assert FrequencyProfile(lambda I: 2 - I, None, None, None, (0.0, 1.0)).check_monotone() == -1


def test_action_angle_rhs_zero_perturbation():
    sys_ = PerturbedSystem(pendulum_energy, zero_field, zero_field, 1.0, OMEGA2, 1e-3)
    F, G = action_angle_rhs(pendulum_chart(), sys_, k_to_action(0.5), 0.3, 0.1, 0.2)
    assert F == 0 and G == 0


def test_action_angle_rhs_chain_rule():
    # F = dI/dt / eps and G = (dtheta/dt - omega)/eps, by differencing the chart
    # inverse along the perturbed vector field
    P = PendulumParams(-8.0, 0.7, 1.0, 1.0, OMEGA2, 1e-3)
    sys_ = pendulum_system(P)
    chart = pendulum_chart()
    k, th, t1, t2 = 0.5, 0.4, 0.3, 1.1
    I = k_to_action(k)
    F, G = action_angle_rhs(chart, sys_, I, th, t1, t2)
    x, y = chart.x_of(I, th), chart.y_of(I, th)
    f = sys_.f_field(x, y, t1, t2)
    d = 1e-6
    Ip, thp = chart.to_action_angle(x, y + d * f)
    Im, thm = chart.to_action_angle(x, y - d * f)
    assert F == pytest.approx((Ip - Im) / (2 * d), abs=1e-7)
    assert G == pytest.approx((thp - thm) / (2 * d), abs=1e-7)
