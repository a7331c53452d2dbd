"""Elliptic integrals, Jacobi elliptic functions and nome Fourier sums.

Everything here is implemented from first principles (AGM, Landen, Carlson
duplication) so the rest of the package carries no special-function
dependency.  Functions accept scalars or numpy arrays for the argument ``u``
(or ``theta``); the modulus ``k`` is a scalar except for ``complete_elliptic_k``
and ``complete_elliptic_e``, which broadcast over arrays of moduli too.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "EllipticDomainError",
    "complementary_modulus",
    "complete_elliptic_k",
    "complete_elliptic_e",
    "complete_elliptic_ke",
    "elliptic_e_minus_kprime2_k",
    "nome",
    "jacobi_sn_cn_dn",
    "jacobi_amplitude",
    "jacobi_zeta",
    "incomplete_elliptic_f",
    "incomplete_elliptic_e",
    "nome_odd_series",
    "fourier_cn_series",
    "MAX_SERIES_TERMS",
]

MAX_SERIES_TERMS = 64
_AGM_TOL = 1e-16
_LANDEN_TOL = 1e-14


class EllipticDomainError(ValueError):
    """Raised when a modulus lies outside the range an operation supports."""


def complementary_modulus(k):
    """k' = sqrt(1 - k^2), formed as sqrt((1-k)(1+k)) to avoid cancellation."""
    return np.sqrt((1.0 - k) * (1.0 + k))


def _as_modulus_array(k, allow_one):
    arr = np.asarray(k, dtype=float)
    bad = (arr < 0) | (arr > 1) | (~allow_one & (arr == 1)) | ~np.isfinite(arr)
    if np.any(bad):
        bound = "[0, 1]" if allow_one else "[0, 1)"
        raise EllipticDomainError(f"elliptic modulus must lie in {bound}, got {k!r}")
    return arr


def _agm(k):
    """AGM run returning (K, tail) with E = K (1 - k^2/2 - tail).

    c_{n+1} = c_n^2 / (4 a_{n+1}) replaces (a_n - b_n)/2, so the c_n decay
    quadratically to zero with no cancellation and tail = sum_{n>=1}
    2^(n-1) c_n^2 keeps full relative accuracy even for small k.
    """
    a = np.ones_like(k)
    b = complementary_modulus(k)
    c = k.copy()
    tail = np.zeros_like(k)
    power = 0.5
    for _ in range(64):
        a_next = 0.5 * (a + b)
        b = np.sqrt(a * b)
        c = c * c / (4.0 * a_next)
        a = a_next
        power *= 2.0
        tail = tail + power * c * c
        if np.all(c <= _AGM_TOL * a):
            break
    return np.pi / (2.0 * a), tail


def _agm_ke(k):
    """AGM iteration returning (K, E) arrays; k must satisfy 0 <= k < 1."""
    kk, tail = _agm(k)
    return kk, kk * (1.0 - 0.5 * k * k - tail)


def complete_elliptic_ke(k):
    """Return (K(k), E(k)) together; they share one AGM run."""
    arr = _as_modulus_array(k, allow_one=False)
    kk, ee = _agm_ke(np.atleast_1d(arr))
    if arr.ndim == 0:
        return float(kk[0]), float(ee[0])
    return kk, ee


def elliptic_e_minus_kprime2_k(k):
    """E(k) - (1 - k^2) K(k) without the cancellation at small k."""
    arr = _as_modulus_array(k, allow_one=False)
    flat = np.atleast_1d(arr)
    kk, tail = _agm(flat)
    out = kk * (0.5 * flat * flat - tail)
    return float(out[0]) if arr.ndim == 0 else out


def complete_elliptic_k(k):
    """Complete elliptic integral of the first kind, modulus convention.

    K(k) = int_0^{pi/2} dphi / sqrt(1 - k^2 sin^2 phi), valid for 0 <= k < 1.
    """
    return complete_elliptic_ke(k)[0]


def complete_elliptic_e(k):
    """Complete elliptic integral of the second kind; E(1) = 1 is allowed."""
    arr = _as_modulus_array(k, allow_one=True)
    flat = np.atleast_1d(arr)
    out = np.ones_like(flat)
    inner = flat < 1.0
    if np.any(inner):
        out[inner] = _agm_ke(flat[inner])[1]
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def nome(k):
    """Jacobi nome a = exp(-pi K(k') / K(k)) for 0 < k < 1."""
    k = float(k)
    if not 0.0 < k < 1.0:
        raise EllipticDomainError(f"nome needs 0 < k < 1, got {k!r}")
    return math.exp(-math.pi * complete_elliptic_k(float(complementary_modulus(k))) / complete_elliptic_k(k))


def _scalar_modulus(k, lo_open=False):
    k = float(k)
    if not (0.0 < k < 1.0 if lo_open else 0.0 <= k < 1.0):
        raise EllipticDomainError(f"modulus out of range: {k!r}")
    return k


def jacobi_sn_cn_dn(u, k):
    """Simultaneous sn, cn, dn by descending Landen transformation.

    The modulus is reduced until it drops below 1e-14, where the circular
    functions are exact to double precision, then the ascending recurrences
    rebuild the three functions at the original modulus.
    """
    k = _scalar_modulus(k)
    u = np.asarray(u, dtype=float)
    moduli = []
    kn = k
    while kn > _LANDEN_TOL:
        kp = float(complementary_modulus(kn))
        kn = (1.0 - kp) / (1.0 + kp)
        moduli.append(kn)
    scale = 1.0
    for kn in moduli:
        scale *= 1.0 + kn
    arg = u / scale
    sn = np.sin(arg)
    cn = np.cos(arg)
    dn = np.ones_like(arg)
    for kn in reversed(moduli):
        s2 = kn * sn * sn
        denom = 1.0 + s2
        sn, cn, dn = (1.0 + kn) * sn / denom, cn * dn / denom, (1.0 - s2) / denom
    if u.ndim == 0:
        return float(sn), float(cn), float(dn)
    return sn, cn, dn


def _carlson_rf(x, y, z):
    x, y, z = np.broadcast_arrays(*(np.asarray(t, dtype=float) for t in (x, y, z)))
    x, y, z = x.copy(), y.copy(), z.copy()
    for _ in range(60):
        mu = (x + y + z) / 3.0
        dev = np.max(np.abs(np.stack([x - mu, y - mu, z - mu])) / mu)
        if dev < 1e-4:
            break
        lam = np.sqrt(x * y) + np.sqrt(y * z) + np.sqrt(z * x)
        x, y, z = 0.25 * (x + lam), 0.25 * (y + lam), 0.25 * (z + lam)
    mu = (x + y + z) / 3.0
    X, Y = 1.0 - x / mu, 1.0 - y / mu
    Z = -(X + Y)
    e2 = X * Y - Z * Z
    e3 = X * Y * Z
    # sixth-order truncation; with dev < 1e-4 the remainder is below 1e-20
    return (1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0) / np.sqrt(mu)


def _carlson_rd(x, y, z):
    x, y, z = np.broadcast_arrays(*(np.asarray(t, dtype=float) for t in (x, y, z)))
    x, y, z = x.copy(), y.copy(), z.copy()
    total = np.zeros_like(x)
    fac = 1.0
    for _ in range(60):
        mu = (x + y + 3.0 * z) / 5.0
        dev = np.max(np.abs(np.stack([x - mu, y - mu, z - mu])) / mu)
        if dev < 1e-4:
            break
        lam = np.sqrt(x * y) + np.sqrt(y * z) + np.sqrt(z * x)
        total = total + fac / (np.sqrt(z) * (z + lam))
        fac *= 0.25
        x, y, z = 0.25 * (x + lam), 0.25 * (y + lam), 0.25 * (z + lam)
    mu = (x + y + 3.0 * z) / 5.0
    X, Y = (mu - x) / mu, (mu - y) / mu
    Z = -(X + Y) / 3.0
    ea = X * Y
    eb = Z * Z
    ec = ea - eb
    ed = ea - 6.0 * eb
    ee = ed + ec + ec
    s = (
        1.0
        + ed * (-3.0 / 14.0 + 9.0 / 88.0 * ed - 9.0 / 52.0 * Z * ee)
        + Z * (ee / 6.0 + Z * (-9.0 / 22.0 * ec + Z * 3.0 / 26.0 * ea))
    )
    return 3.0 * total + fac * s / (mu * np.sqrt(mu))


def _principal_incomplete(phi, k):
    """F and E for |phi| <= pi/2 via Carlson symmetric forms."""
    s = np.sin(phi)
    c2 = np.cos(phi) ** 2
    d2 = 1.0 - k * k * s * s
    rf = _carlson_rf(c2, d2, 1.0)
    rd = _carlson_rd(c2, d2, 1.0)
    f = s * rf
    e = f - (k * k / 3.0) * s ** 3 * rd
    return f, e


def _incomplete(phi, k, which):
    k = _scalar_modulus(k)
    phi = np.asarray(phi, dtype=float)
    kk, ee = complete_elliptic_ke(k)
    m = np.round(phi / np.pi)
    red = phi - m * np.pi
    f, e = _principal_incomplete(red, k)
    out = f + 2.0 * m * kk if which == "F" else e + 2.0 * m * ee
    return float(out) if phi.ndim == 0 else out


def incomplete_elliptic_f(phi, k):
    """Incomplete integral of the first kind F(phi, k), any real phi (internal)."""
    return _incomplete(phi, k, "F")


def incomplete_elliptic_e(phi, k):
    """Incomplete integral of the second kind E(phi, k), any real phi (internal)."""
    return _incomplete(phi, k, "E")


def jacobi_amplitude(u, k):
    """Continuous amplitude am(u, k), with am(u + 2K) = am(u) + pi."""
    k = _scalar_modulus(k)
    u = np.asarray(u, dtype=float)
    kk = complete_elliptic_k(k)
    m = np.round(u / (2.0 * kk))
    sn, cn, _ = jacobi_sn_cn_dn(u - 2.0 * kk * m, k)
    out = np.arctan2(sn, cn) + np.pi * m
    return float(out) if u.ndim == 0 else out


def jacobi_zeta(u, k):
    """Jacobi zeta function Z(u, k) = E(am u, k) - u E(k)/K(k).

    Evaluated on the reduced argument in [-K, K] (Z has period 2K) through
    Carlson's R_F and R_D, which are symmetric and well conditioned there.
    """
    k = _scalar_modulus(k, lo_open=True)
    u = np.asarray(u, dtype=float)
    kk, ee = complete_elliptic_ke(k)
    red = u - 2.0 * kk * np.round(u / (2.0 * kk))
    sn, cn, dn = jacobi_sn_cn_dn(red, k)
    rd = _carlson_rd(cn * cn, dn * dn, 1.0)
    # E(am u) - u E/K, with F(am u) = u on the principal branch
    z = red - (k * k / 3.0) * sn ** 3 * rd - red * ee / kk
    return float(z) if u.ndim == 0 else z


def nome_odd_series(k, theta, weight, trig="cos", n_terms=None):
    """Sum  sum_j weight(j, a) * trig((2j-1) theta)  over odd harmonics.

    ``weight`` receives the harmonic index j (1-based, as an integer array)
    and the nome a.  With ``n_terms=None`` the sum is truncated once the
    weight magnitude drops below 1e-15 of the running coefficient mass,
    with a hard cap of MAX_SERIES_TERMS.
    """
    a = nome(k)
    theta = np.asarray(theta, dtype=float)
    if n_terms is None:
        j = np.arange(1, MAX_SERIES_TERMS + 1)
        w = np.asarray(weight(j, a), dtype=float)
        mass = np.cumsum(np.abs(w))
        small = np.abs(w) < 1e-15 * mass
        n_terms = int(np.argmax(small)) + 1 if np.any(small) else MAX_SERIES_TERMS
        w = w[:n_terms]
        j = j[:n_terms]
    else:
        j = np.arange(1, int(n_terms) + 1)
        w = np.asarray(weight(j, a), dtype=float)
    func = np.cos if trig == "cos" else np.sin
    harm = func(np.multiply.outer(theta, 2 * j - 1))
    out = harm @ w
    return float(out) if theta.ndim == 0 else out


def fourier_cn_series(k, theta, n_terms=None):
    """(4kK/pi) cn(2K theta/pi, k) through its nome expansion.

    8 sum_j a^(j-1/2) / (1 + a^(2j-1)) cos((2j-1) theta).
    """
    return nome_odd_series(
        k, theta, lambda j, a: 8.0 * a ** (j - 0.5) / (1.0 + a ** (2 * j - 1)), "cos", n_terms
    )
