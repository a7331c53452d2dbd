"""Named parameter sets of the pendulum example, one per qualitative portrait.

Every preset sits at the double-cycle bifurcation (p1 = p1*, omega1 = 1 and
omega2 tuned so the 3:(1,1) resonance lies at k*) with p3 = 1 and
mu = sqrt(epsilon) = 0.1.  The remaining knobs are p2 (switches the
alternating part of sigma on), the detunings gamma1, gamma2, the model form,
and an optional replacement value for B2.

The pendulum's own B2(k*) = -3.873 is large, so the O(mu^2) B2 term beats the
O(mu) sigma term at the scale of the separatrix loops.  The family-2 portraits
need the two comparable, which is why they shrink B2 by hand:

========  =====  ==========================  ===================================
name      p2     B2                          portrait
========  =====  ==========================  ===================================
fig1a     0      B2(k*) (natural, < 0)       partly passable, loops split
fig1b     0      0                           impassable, two closed loops
fig1c     0      -B2(k*) (> 0)               partly passable, split the other way
fig2a     1      3e-5                        impassable, no rotational cycle
fig2b     1      3e-4                        impassable, unstable rotational cycle
fig2c     1      MERGER_B2                   one loop closed (cycle merged)
fig2d     1      1.0                         partly passable
fig3      0      natural, full form          constant sigma, cycles on both halves
fig4      1      natural, full form          alternating sigma, cycle round focus
========  =====  ==========================  ===================================

``MERGER_B2`` is the value at which the unstable rotational cycle of fig2b
has grown into the upper separatrix loop; :func:`merger_b2` recomputes it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from scipy.optimize import brentq

from .dynamics import FULL, SYMMETRIC, AveragedModel, find_equilibria
from .melnikov import separatrix_gap
from .pendulum import PendulumParams, pendulum_resonance_coefficients

PRESET_MU = 0.1
NATURAL_B2 = -3.8733994243843735
MERGER_B2 = 0.0027949676112103868


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    p2: float
    form: str = SYMMETRIC
    B2: Optional[float] = None
    gamma1: float = 0.0
    gamma2: float = 0.0
    p3: float = 1.0
    mu: float = PRESET_MU

    def params(self) -> PendulumParams:
        return PendulumParams.at_bifurcation(p2=self.p2, p3=self.p3, epsilon=self.mu**2)

    def coefficients(self):
        return pendulum_resonance_coefficients(self.params(), self.gamma1, self.gamma2, B2_override=self.B2)

    def model(self) -> AveragedModel:
        return AveragedModel(self.coefficients(), self.form)

    def config(self):
        """Parameter map accepted by the CLI for system "pendulum-q2"."""
        P = self.params()
        out = {
            "p1": P.p1,
            "p2": P.p2,
            "p3": P.p3,
            "omega1": P.omega1,
            "omega2": P.omega2,
            "epsilon": P.epsilon,
            "gamma1": self.gamma1,
            "gamma2": self.gamma2,
        }
        if self.B2 is not None:
            out["B2_override"] = self.B2
        return out


PRESETS = {
    p.name: p
    for p in (
        Preset("fig1a", "sigma~ = 0, pendulum B2 < 0: partly passable", p2=0.0),
        Preset("fig1b", "sigma~ = 0, B2 = 0: two closed separatrix loops", p2=0.0, B2=0.0),
        Preset("fig1c", "sigma~ = 0, B2 > 0: partly passable, opposite splitting", p2=0.0, B2=-NATURAL_B2),
        Preset("fig2a", "alternating sigma~, tiny B2: impassable, no rotational cycle", p2=1.0, B2=3e-5),
        Preset("fig2b", "alternating sigma~, small B2: impassable, unstable rotational cycle", p2=1.0, B2=3e-4),
        Preset("fig2c", "alternating sigma~, B2 at the cycle/loop merger", p2=1.0, B2=MERGER_B2),
        Preset("fig2d", "alternating sigma~, B2 = 1: partly passable", p2=1.0, B2=1.0),
        Preset("fig3", "constant sigma = mu gamma2, gamma1 > 0: rotational cycles on both halves", p2=0.0,
               form=FULL, gamma1=0.05, gamma2=-0.5),
        Preset("fig4", "alternating sigma with detuning: unstable cycle around the stable focus", p2=1.0,
               form=FULL, gamma2=-0.01),
    )
}

# the seven regimes of the symmetric portrait families
SYMMETRIC_REGIMES = ("fig1a", "fig1b", "fig1c", "fig2a", "fig2b", "fig2c", "fig2d")


def get_preset(name) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}") from None


def upper_loop_gap(B2, p2=1.0, mu=PRESET_MU):
    """u-gap of the separatrix loop on the upper half-cylinder (symmetric form)."""
    P = PendulumParams.at_bifurcation(p2=p2, epsilon=mu**2)
    model = AveragedModel(pendulum_resonance_coefficients(P, B2_override=B2), SYMMETRIC)
    saddle = next(e for e in find_equilibria(model) if e.kind == "saddle")
    branch = 1 if model.coeffs.b1 > 0 else -1
    return separatrix_gap(model, saddle.v, branch=branch).u_gap


def merger_b2(p2=1.0, mu=PRESET_MU, bracket=(1e-3, 3e-3)):
    """B2 at which the upper separatrix loop closes."""
    return brentq(upper_loop_gap, *bracket, args=(p2, mu), xtol=1e-15, rtol=1e-14)
