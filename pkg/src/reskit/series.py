"""Real trigonometric series on the resonance cylinder.

Every coefficient function of the averaged system is periodic in the slow
phase v with period 2*pi/n.  ``TrigSeries`` stores it as

    mean + sum_h  cos_h cos(h n v) + sin_h sin(h n v),   h = 1..H

which makes evaluation, differentiation and integration exact and cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TrigSeries:
    n: int
    mean: float
    cos: np.ndarray
    sin: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.cos, dtype=float))
        s = np.atleast_1d(np.asarray(self.sin, dtype=float))
        if c.shape != s.shape or c.ndim != 1:
            raise ValueError("cos and sin coefficient arrays must be 1-D and equal length")
        object.__setattr__(self, "cos", c)
        object.__setattr__(self, "sin", s)
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "n", int(self.n))

    # -- construction -----------------------------------------------------
    @classmethod
    def zero(cls, n, harmonics=1):
        return cls(n, 0.0, np.zeros(harmonics), np.zeros(harmonics))

    @classmethod
    def constant(cls, n, value, harmonics=1):
        return cls(n, value, np.zeros(harmonics), np.zeros(harmonics))

    @classmethod
    def harmonic(cls, n, cos_amp=0.0, sin_amp=0.0):
        """cos_amp cos(n v) + sin_amp sin(n v)."""
        return cls(n, 0.0, np.array([cos_amp]), np.array([sin_amp]))

    @classmethod
    def from_samples(cls, samples, n, drop_below=0.0):
        """Fit from samples on the uniform grid v_j = j (2pi/n) / M, j < M."""
        samples = np.asarray(samples, dtype=float)
        m = samples.size
        spec = np.fft.rfft(samples) / m
        h = (m - 1) // 2  # drop the Nyquist bin for even m
        c = 2.0 * spec.real[1 : h + 1]
        s = -2.0 * spec.imag[1 : h + 1]
        if h == 0:
            c, s = np.zeros(1), np.zeros(1)
        if drop_below > 0:
            scale = max(abs(spec[0].real), np.max(np.hypot(c, s), initial=0.0))
            keep = np.hypot(c, s) > drop_below * max(scale, 1e-300)
            last = np.nonzero(keep)[0]
            n_keep = last[-1] + 1 if last.size else 1
            c, s = np.where(keep, c, 0.0)[:n_keep], np.where(keep, s, 0.0)[:n_keep]
        return cls(n, spec[0].real, c, s)

    @classmethod
    def from_function(cls, fn, n, samples=64, drop_below=0.0):
        return cls.from_samples(fn(sample_grid(n, samples)), n, drop_below)

    # -- evaluation -------------------------------------------------------
    @property
    def period(self):
        return 2.0 * np.pi / self.n

    @property
    def harmonics(self):
        return self.cos.size

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        arg = np.multiply.outer(v, self.n * np.arange(1, self.harmonics + 1))
        out = self.mean + np.cos(arg) @ self.cos + np.sin(arg) @ self.sin
        return float(out) if v.ndim == 0 else out

    def amplitude(self, samples=256):
        """max |f - mean| on a fine grid."""
        return float(np.max(np.abs(self.tilde()(sample_grid(self.n, samples)))))

    def max_abs(self, samples=256):
        return float(np.max(np.abs(self(sample_grid(self.n, samples)))))

    def is_zero(self, tol=1e-14):
        return abs(self.mean) <= tol and np.all(np.abs(self.cos) <= tol) and np.all(np.abs(self.sin) <= tol)

    # -- calculus ---------------------------------------------------------
    def tilde(self):
        """Mean-free part."""
        return TrigSeries(self.n, 0.0, self.cos, self.sin)

    def derivative(self):
        w = self.n * np.arange(1, self.harmonics + 1)
        return TrigSeries(self.n, 0.0, w * self.sin, -w * self.cos)

    def antiderivative(self):
        """Periodic antiderivative of the mean-free part (zero mean)."""
        w = self.n * np.arange(1, self.harmonics + 1)
        return TrigSeries(self.n, 0.0, -self.sin / w, self.cos / w)

    # -- algebra ----------------------------------------------------------
    def _padded(self, h):
        pad = h - self.harmonics
        if pad <= 0:
            return self.cos, self.sin
        return np.pad(self.cos, (0, pad)), np.pad(self.sin, (0, pad))

    def _check(self, other):
        if other.n != self.n:
            raise ValueError(f"period mismatch: n={self.n} vs n={other.n}")

    def __add__(self, other):
        if isinstance(other, TrigSeries):
            self._check(other)
            h = max(self.harmonics, other.harmonics)
            c1, s1 = self._padded(h)
            c2, s2 = other._padded(h)
            return TrigSeries(self.n, self.mean + other.mean, c1 + c2, s1 + s2)
        return TrigSeries(self.n, self.mean + float(other), self.cos, self.sin)

    __radd__ = __add__

    def __neg__(self):
        return TrigSeries(self.n, -self.mean, -self.cos, -self.sin)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TrigSeries):
            self._check(other)
            h = self.harmonics + other.harmonics
            m = 2 * h + 2
            grid = sample_grid(self.n, m)
            return TrigSeries.from_samples(self(grid) * other(grid), self.n)
        other = float(other)
        return TrigSeries(self.n, self.mean * other, self.cos * other, self.sin * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * (1.0 / float(other))


def sample_grid(n, samples):
    """Uniform grid of ``samples`` points over one period [0, 2pi/n)."""
    return (2.0 * np.pi / n) * np.arange(samples) / samples


class SeriesBank:
    """Several TrigSeries of the same period evaluated with one trig call."""

    def __init__(self, series):
        series = list(series)
        if not series:
            raise ValueError("empty series bank")
        n = series[0].n
        h = max(s.harmonics for s in series)
        for s in series:
            s._check(series[0])
        self.n = n
        self.size = len(series)
        self.mean = np.array([s.mean for s in series])
        self.cos = np.stack([s._padded(h)[0] for s in series], axis=1)
        self.sin = np.stack([s._padded(h)[1] for s in series], axis=1)
        self.freqs = n * np.arange(1, h + 1)
        deriv = [s.derivative() for s in series]
        self.dcos = np.stack([s._padded(h)[0] for s in deriv], axis=1)
        self.dsin = np.stack([s._padded(h)[1] for s in deriv], axis=1)

    def values(self, v):
        """Array of shape v.shape + (size,)."""
        arg = np.multiply.outer(np.asarray(v, dtype=float), self.freqs)
        return self.mean + np.cos(arg) @ self.cos + np.sin(arg) @ self.sin

    def values_and_derivatives(self, v):
        arg = np.multiply.outer(np.asarray(v, dtype=float), self.freqs)
        c, s = np.cos(arg), np.sin(arg)
        return self.mean + c @ self.cos + s @ self.sin, c @ self.dcos + s @ self.dsin
