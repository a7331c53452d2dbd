import numpy as np
import pytest
from conftest import synthetic_coeffs
from scipy.integrate import solve_ivp

from reskit.cycles import find_limit_cycles
from reskit.dynamics import FULL, SYMMETRIC, AveragedModel, find_equilibria
from reskit.portrait import PortraitOptions, classify_portrait, figure_family, scan_passability, sigma_family
from reskit.presets import get_preset
from reskit.series import TrigSeries


@pytest.fixture(scope="module")
def fig3():
    m = get_preset("fig3").model()
    return m, classify_portrait(m)


@pytest.fixture(scope="module")
def fig4():
    m = get_preset("fig4").model()
    return m, classify_portrait(m)


def first_return(model, v0, u0, v_target, t_max, t_min=1.0):
    """u at the first crossing of v = v_target after t_min, by a separate event integration."""
    def f(t, s):
        du, dv = model.rhs(s[0], s[1])
        return [dv, du]

    def hit(t, s):
        return s[0] - v_target

    hit.terminal = True
    start = [v0, u0]
    if t_min > 0:
        # step off the section first so the start itself is not reported
        start = solve_ivp(f, (0.0, t_min), start, rtol=1e-12, atol=1e-13).y[:, -1]
    sol = solve_ivp(f, (t_min, t_max), start, rtol=1e-12, atol=1e-13, events=hit)
    return float(sol.y_events[0][0][1])


def displacement(model, cycle, center_u, frac, v_target, t_max, t_min=1.0):
    """Signed change of the distance to the cycle after one return, for a start at frac."""
    s0 = center_u + frac * (cycle.u_section - center_u)
    s1 = first_return(model, cycle.v_section, s0, v_target, t_max, t_min)
    return abs(s1 - cycle.u_section) - abs(s0 - cycle.u_section)


def test_no_cycles_at_mu_zero():
    m = AveragedModel(synthetic_coeffs(mu=0.0, B0=0.2), FULL)
    assert find_limit_cycles(m, find_equilibria(m)) == []


def test_sigma_families():
    assert sigma_family(AveragedModel(synthetic_coeffs(), SYMMETRIC)) == "zero"
    alt = synthetic_coeffs(sigma_tilde=TrigSeries.harmonic(3, cos_amp=0.2))
    assert sigma_family(AveragedModel(alt, SYMMETRIC)) == "alternating"
    assert figure_family(AveragedModel(alt, SYMMETRIC)) == "2"
    const = synthetic_coeffs(B1=0.0, gamma2=1.0)
    assert figure_family(AveragedModel(const, FULL)) == "3"
    assert figure_family(AveragedModel(synthetic_coeffs(gamma2=1.0, sigma_tilde=alt.sigma_tilde), FULL)) == "4"


def test_fig3_cycles_on_both_halves_with_opposite_stability(fig3):
    m, pp = fig3
    assert pp.figure == "3a|3e" and pp.taxonomy == "partly_passable"
    upper, lower = pp.cycles_at("upper"), pp.cycles_at("lower")
    assert len(upper) == 1 and len(lower) == 1
    assert upper[0].stable != lower[0].stable
    for c in upper + lower:
        assert c.closure < 1e-6
        assert (abs(c.multiplier) < 1) == c.stable


def test_fig3_cycle_stability_by_direct_return(fig3):
    m, pp = fig3
    for c in pp.limit_cycles:
        dv = m.rhs(c.v_section, c.u_section)[1]
        target = c.v_section + np.sign(dv) * m.period
        t_max = 10 * m.period / abs(dv)
        for frac in (0.9, 1.1):
            moved = displacement(m, c, 0.0, frac, target, t_max, t_min=0.0)
            assert (moved < 0) == c.stable


def test_fig4_oscillatory_cycle_is_unstable_around_stable_focus(fig4):
    m, pp = fig4
    assert pp.family == "4"
    osc = pp.cycles_at("oscillatory")
    assert len(osc) == 1 and not osc[0].stable
    assert osc[0].closure < 1e-6
    focus = next(e for e in pp.equilibria if e.kind.endswith("focus"))
    assert focus.stable
    c = osc[0]
    # one turn round the focus takes about 2 pi / Im(lambda)
    t_max = 3 * 2 * np.pi / abs(focus.eigenvalues[0].imag)
    for frac in (0.98, 1.02):
        assert displacement(m, c, focus.u, frac, focus.v, t_max, t_min=1.0) > 0


def test_scan_is_worker_independent():
    m = get_preset("fig1a").model()
    a = scan_passability(m, PortraitOptions(scan_grid=(6, 6), horizon=50.0, workers=1))
    b = scan_passability(m, PortraitOptions(scan_grid=(6, 6), horizon=50.0, workers=3))
    assert np.array_equal(a.escaped, b.escaped)
    assert np.array_equal(a.v, b.v) and np.array_equal(a.u, b.u)


def test_seeded_scan_is_reproducible():
    m = get_preset("fig1a").model()
    opts = PortraitOptions(scan_grid=(4, 5), horizon=20.0, seed=11)
    a, b = scan_passability(m, opts), scan_passability(m, opts)
    assert np.array_equal(a.v0, b.v0) and np.array_equal(a.escaped, b.escaped)
    grid = scan_passability(m, PortraitOptions(scan_grid=(4, 5), horizon=20.0))
    assert not np.array_equal(a.v0, grid.v0)


def test_options_validation():
    with pytest.raises(ValueError):
        PortraitOptions(scan_grid=(1, 5))
    with pytest.raises(ValueError):
        PortraitOptions(workers=0)
    with pytest.raises(ValueError):
        PortraitOptions(horizon=-1.0)


def test_full_and_symmetric_forms_share_topology():
    # the symmetric form drops the conservative 2 mu (b2/b1) A~ v' term; at small mu it must not matter
    rc = get_preset("fig1a").coefficients()
    sym = classify_portrait(AveragedModel(rc, SYMMETRIC))
    full = classify_portrait(AveragedModel(rc, FULL))
    assert sorted(e.kind for e in full.equilibria) == sorted(e.kind for e in sym.equilibria)
    assert full.taxonomy == sym.taxonomy
    assert [c.location for c in full.limit_cycles] == [c.location for c in sym.limit_cycles]
