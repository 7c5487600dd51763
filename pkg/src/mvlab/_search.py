"""Scalar minimization helpers: coarse grid scan plus golden-section
refinement.  Used by the parameter-condition checkers, which need
arg-inf locations as well as values.
"""

from __future__ import annotations

import numpy as np

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, a, b, tol=1e-12, max_iter=200):
    """Minimize a unimodal f on [a, b]; returns (x_min, f_min)."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def minimize_two_stage(f, lo, hi, n_coarse=2000, log_grid=True, tol=1e-13):
    """Coarse scan of [lo, hi] followed by golden-section around the best
    bracket.  Returns (x_min, f_min).  With log_grid=True the scan is
    geometric (lo must be positive)."""
    if log_grid:
        grid = np.geomspace(lo, hi, n_coarse)
    else:
        grid = np.linspace(lo, hi, n_coarse)
    vals = np.array([f(s) for s in grid])
    k = int(np.argmin(vals))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, len(grid) - 1)]
    x, fx = golden_section(f, a, b, tol=tol)
    # keep the grid point if refinement did not improve (flat objective)
    if vals[k] < fx:
        return float(grid[k]), float(vals[k])
    return float(x), float(fx)
