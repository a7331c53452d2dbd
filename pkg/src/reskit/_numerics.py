"""Small numerical utilities shared across modules."""

from __future__ import annotations

import numpy as np


def richardson_derivative(fn, x, step, order=1, levels=2):
    """Central-difference derivative of ``fn`` at ``x`` with Richardson extrapolation.

    ``fn`` may return an array; the derivative is taken elementwise.  Each
    level halves the step and removes the next even power of the step from
    the truncation error.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    f0 = np.asarray(fn(x), dtype=float) if order == 2 else None
    table = []
    h = step
    for _ in range(levels):
        fp = np.asarray(fn(x + h), dtype=float)
        fm = np.asarray(fn(x - h), dtype=float)
        if order == 1:
            table.append((fp - fm) / (2.0 * h))
        else:
            table.append((fp - 2.0 * f0 + fm) / (h * h))
        h *= 0.5
    # Neville-style elimination of h^2, h^4, ...
    for j in range(1, levels):
        factor = 4.0 ** j
        table = [(factor * table[i + 1] - table[i]) / (factor - 1.0) for i in range(len(table) - 1)]
    return table[0]
