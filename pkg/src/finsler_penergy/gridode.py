"""RK4 integration of linear ODE systems whose coefficients live on a grid.

The engine stores curve data at uniformly spaced nodes; RK4 needs midpoint
coefficient values, which are filled in by 4-point cubic interpolation so
the integrator keeps its full order against smooth coefficients.
"""

from __future__ import annotations

import numpy as np


def interp_half(values: np.ndarray) -> np.ndarray:
    """Midpoint samples of node data, cubic 4-point interpolation.

    ``values`` has shape (K+1, ...); the result has shape (K, ...) with
    entry k approximating the field at the midpoint of interval k.
    """
    v = np.asarray(values, dtype=float)
    K = v.shape[0] - 1
    if K < 3:
        raise ValueError("need at least 4 samples for midpoint interpolation")
    mids = np.empty((K,) + v.shape[1:], dtype=float)
    mids[1:-1] = (-v[:-3] + 9.0 * v[1:-2] + 9.0 * v[2:-1] - v[3:]) / 16.0
    mids[0] = (5.0 * v[0] + 15.0 * v[1] - 5.0 * v[2] + v[3]) / 16.0
    mids[-1] = (v[-4] - 5.0 * v[-3] + 15.0 * v[-2] + 5.0 * v[-1]) / 16.0
    return mids


def rk4_linear(A_nodes: np.ndarray, u0: np.ndarray, h: float) -> np.ndarray:
    """Integrate u' = A(t) u across the grid carrying A at the nodes.

    ``A_nodes`` has shape (K+1, d, d); ``u0`` is (d,) or (d, m) for several
    simultaneous initial vectors.  Returns (K+1,) + u0.shape.
    """
    A = np.asarray(A_nodes, dtype=float)
    mids = interp_half(A)
    K = A.shape[0] - 1
    u = np.asarray(u0, dtype=float)
    out = np.empty((K + 1,) + u.shape, dtype=float)
    out[0] = u
    for k in range(K):
        a0, am, a1 = A[k], mids[k], A[k + 1]
        k1 = a0 @ u
        k2 = am @ (u + 0.5 * h * k1)
        k3 = am @ (u + 0.5 * h * k2)
        k4 = a1 @ (u + h * k3)
        u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = u
    return out


def rk4(f, u0: np.ndarray, t0: float, t1: float, steps: int) -> np.ndarray:
    """Plain fixed-step RK4 for u' = f(t, u); returns states at all steps."""
    h = (t1 - t0) / steps
    u = np.asarray(u0, dtype=float)
    out = np.empty((steps + 1,) + u.shape, dtype=float)
    out[0] = u
    t = t0
    for k in range(steps):
        k1 = f(t, u)
        k2 = f(t + 0.5 * h, u + 0.5 * h * k1)
        k3 = f(t + 0.5 * h, u + 0.5 * h * k2)
        k4 = f(t + h, u + h * k3)
        u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = u
        t += h
    return out
