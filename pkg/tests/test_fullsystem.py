import math

import numpy as np
import pytest

from reskit.fullsystem import (
    FullTrajectory,
    averaged_to_phase,
    cell_energy_range,
    integrate_full_system,
)
from reskit.hamiltonian import ChartDomainError, PerturbedSystem, k_to_action
from reskit.pendulum import PENDULUM_INDEX, PendulumParams, pendulum_chart, pendulum_system


@pytest.fixture(scope="module")
def setup():
    P = PendulumParams.at_bifurcation(p2=1.0, epsilon=1e-3)
    return P, pendulum_system(P), pendulum_chart()


def test_cell_energy_range(setup):
    _, sys_, chart = setup
    lo, hi = cell_energy_range(sys_, chart)
    assert lo == pytest.approx(-1.0, abs=1e-6)
    assert hi == pytest.approx(1.0, abs=1e-6)


def test_averaged_to_phase_round_trip(setup):
    P, _, chart = setup
    I_res = k_to_action(0.759)
    mu = math.sqrt(P.epsilon)
    x, y = averaged_to_phase(chart, I_res, mu, 0.4, 0.7, PENDULUM_INDEX, P.omega1, P.omega2)
    I, th = chart.to_action_angle(x, y)
    assert I == pytest.approx(I_res + mu * 0.7, abs=1e-12)
    assert th == pytest.approx(0.4, abs=1e-10)
    # at time t the phase advances by the resonant frequency
    t = 2.5
    x, y = averaged_to_phase(chart, I_res, mu, 0.4, 0.7, PENDULUM_INDEX, P.omega1, P.omega2, t=t)
    _, th = chart.to_action_angle(x, y)
    expected = np.mod(0.4 + (P.omega1 + P.omega2) * t / 3, 2 * np.pi)
    assert th == pytest.approx(expected, abs=1e-10)


def test_unperturbed_flow_conserves_action(setup):
    _, sys_, chart = setup
    I0 = k_to_action(0.6)
    x0, y0 = float(chart.x_of(I0, 0.3)), float(chart.y_of(I0, 0.3))
    tr = integrate_full_system(sys_, chart, x0, y0, 1000.0, PENDULUM_INDEX, rtol=1e-12, atol=1e-12, epsilon=0.0)
    assert not tr.exited
    assert tr.max_action_deviation(I0) < 1e-8
    # theta advances at the natural frequency
    omega = chart.omega(I0)
    assert tr.theta[-1] - tr.theta[0] == pytest.approx(omega * 1000.0, rel=1e-8)


def test_cell_exit_is_reported():
    # anti-damping pumps energy until the orbit reaches the separatrix
    sys_ = PerturbedSystem(lambda x, y: 0.5 * y * y - np.cos(x), lambda x, y, a, b: 0 * x,
                           lambda x, y, a, b: y + 0 * a, 1.0, 1.4482208150489941, 0.05)
    chart = pendulum_chart()
    I0 = k_to_action(0.9)
    tr = integrate_full_system(sys_, chart, float(chart.x_of(I0, 0.0)), float(chart.y_of(I0, 0.0)),
                               500.0, PENDULUM_INDEX)
    assert tr.exited
    assert 0 < tr.exit_time < 500.0
    assert tr.t[-1] < tr.exit_time


def test_start_outside_cell_rejected(setup):
    _, sys_, chart = setup
    with pytest.raises(ChartDomainError):
        integrate_full_system(sys_, chart, 0.0, 3.0, 10.0, PENDULUM_INDEX)


def test_trajectory_helpers():
    t = np.linspace(0, 10, 11)
    v = -0.5 * t
    tr = FullTrajectory(t, t, t, np.full(11, 1.0) + 0.01 * t, t, v)
    assert tr.v_drift() == -5.0
    assert tr.first_crossing(2.0) == 4.0
    assert tr.first_crossing(100.0) is None
    assert tr.max_action_deviation(1.0) == pytest.approx(0.1)
    assert not tr.exited
