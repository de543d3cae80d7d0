"""Finite differences and cumulative quadrature on uniform grids.

Everything here works along axis 0 so that time-like sample stacks
(shape ``(M+1, ...)``) can be differentiated and integrated without
reshaping. Grids must be uniform; callers own that invariant.
"""

from __future__ import annotations

import numpy as np


def uniform_step(x: np.ndarray) -> float:
    """Return the grid step, checking the spacing really is uniform."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("grid must be a 1-D array with at least two nodes")
    steps = np.diff(x)
    h = float(steps[0])
    if not np.allclose(steps, h, rtol=1e-9, atol=1e-15):
        raise ValueError("grid spacing is not uniform")
    return h


def fd_derivative(y: np.ndarray, h: float, order: int = 2) -> np.ndarray:
    """Differentiate samples along axis 0 with central stencils.

    ``order=2``: three-point central interior, one-sided second order at the
    endpoints. ``order=4``: five-point central interior, one-sided fourth
    order on the two boundary nodes at each end.
    """
    y = np.asarray(y)
    n = y.shape[0]
    out = np.empty(y.shape, dtype=np.result_type(y.dtype, float))
    if order == 2:
        if n < 3:
            raise ValueError("second-order differences need at least 3 samples")
        out[1:-1] = (y[2:] - y[:-2]) / (2.0 * h)
        out[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h)
        out[-1] = (3.0 * y[-1] - 4.0 * y[-2] + y[-3]) / (2.0 * h)
        return out
    if order == 4:
        if n < 6:
            raise ValueError("fourth-order differences need at least 6 samples")
        out[2:-2] = (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * h)
        c0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
        c1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0
        shape = (5,) + (1,) * (y.ndim - 1)
        out[0] = np.sum(c0.reshape(shape) * y[:5], axis=0) / h
        out[1] = np.sum(c1.reshape(shape) * y[:5], axis=0) / h
        out[-1] = -np.sum(c0.reshape(shape) * y[-1:-6:-1], axis=0) / h
        out[-2] = -np.sum(c1.reshape(shape) * y[-1:-6:-1], axis=0) / h
        return out
    raise ValueError(f"unsupported difference order {order!r} (use 2 or 4)")


def cumulative_integral(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Cumulative integral of samples along axis 0, zero at the first node.

    Uses the fourth-order four-point Newton-Cotes increments
    ``h/24 * (-y[k-1] + 13 y[k] + 13 y[k+1] - y[k+2])`` with matching
    one-sided rules on the first and last intervals, so smooth integrands
    come out O(h^4) accurate everywhere on the grid. Falls back to the
    trapezoid rule when fewer than four nodes are available.
    """
    y = np.asarray(y)
    h = uniform_step(x)
    n = y.shape[0]
    if n != len(x):
        raise ValueError("samples and grid have mismatched lengths")
    out = np.zeros(y.shape, dtype=np.result_type(y.dtype, float))
    if n < 4:
        out[1:] = np.cumsum(0.5 * h * (y[1:] + y[:-1]), axis=0)
        return out
    incr = np.empty((n - 1,) + y.shape[1:], dtype=out.dtype)
    incr[0] = h / 24.0 * (9.0 * y[0] + 19.0 * y[1] - 5.0 * y[2] + y[3])
    incr[1:-1] = h / 24.0 * (-y[:-3] + 13.0 * y[1:-2] + 13.0 * y[2:-1] - y[3:])
    incr[-1] = h / 24.0 * (y[-4] - 5.0 * y[-3] + 19.0 * y[-2] + 9.0 * y[-1])
    out[1:] = np.cumsum(incr, axis=0)
    return out


def integral(y: np.ndarray, x: np.ndarray):
    """Definite integral over the whole grid (last cumulative value)."""
    return cumulative_integral(y, x)[-1]


def refinement_error(y: np.ndarray, x: np.ndarray):
    """Estimate the quadrature error of :func:`integral` by stride-2 comparison.

    Requires an even number of intervals; returns the absolute difference
    between the full-grid and half-grid results, an upper-bound-flavored
    proxy for the fine-grid truncation error.
    """
    y = np.asarray(y)
    n = y.shape[0]
    if n < 5 or (n - 1) % 2:
        raise ValueError("refinement estimate needs an even interval count >= 4")
    full = integral(y, x)
    coarse = integral(y[::2], x[::2])
    return np.max(np.abs(full - coarse))
