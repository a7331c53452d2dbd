import pytest

from reskit.averaging import ResonanceCoefficients
from reskit.series import TrigSeries


def synthetic_coeffs(n=3, a=1.0, b1=-0.5, mu=0.1, b2=0.0, b3=0.0, B0=0.0, B1=0.0, B2=0.0,
                     gamma1=0.0, gamma2=0.0, **series):
    """Resonance coefficients with A~ = a sin(n v) and the other series zero unless given."""
    zero = TrigSeries.zero(n)
    fields = {name: series.get(name, zero) for name in ("P0_tilde", "Q0", "P1_tilde", "Q1", "sigma_tilde")}
    return ResonanceCoefficients(
        n=n, I_res=1.0, A_tilde=series.get("A_tilde", TrigSeries.harmonic(n, sin_amp=a)), B0_val=B0, B1_val=B1,
        B2_val=B2, b1=b1, b2=b2, b3=b3, mu=mu, gamma1=gamma1, gamma2=gamma2, **fields,
    )


@pytest.fixture
def synthetic():
    return synthetic_coeffs
