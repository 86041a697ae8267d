"""Finite-difference derivative engine.

All metric-agnostic differentiation goes through here.  Two kinds of
stencils are used:

* the fundamental-tensor Hessian of F^2 uses plain second-order central
  differences (diagonal three-point, mixed four-point) with step
  ``h = max(1e-5, 1e-5 * |y|)``;
* first derivatives taken at the connection/curvature levels use
  fourth-order five-point stencils with a staggered step ladder
  (each nesting level 10x the one below) so that noise from the inner
  level is not amplified past the advertised tolerances.

Functions differentiated here map a 1-d coordinate array to a scalar or
to an ndarray; vectorised variants operate on a leading batch axis.
"""

from __future__ import annotations

import numpy as np

# Step ladder, innermost to outermost nesting level.
H_HESS = 1e-5    # Hessian of F^2 (fundamental tensor)
H_DG = 1e-4      # x- and y-derivatives of the fundamental tensor
H_SPRAY = 1e-3   # y-derivative of the contracted spray coefficient
H_CURV = 1e-2    # x- and y-derivatives of the nonlinear connection


def hessian(f, y, h=None):
    """Second-order central Hessian of scalar ``f`` at 1-d point ``y``.

    Diagonal entries use the three-point stencil, mixed entries the
    four-point stencil.  The result is exactly symmetric.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if h is None:
        h = max(H_HESS, H_HESS * float(np.linalg.norm(y)))
    out = np.empty((n, n))
    f0 = f(y)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        out[i, i] = (f(y + ei) - 2.0 * f0 + f(y - ei)) / (h * h)
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h
            mixed = (f(y + ei + ej) - f(y + ei - ej)
                     - f(y - ei + ej) + f(y - ei - ej)) / (4.0 * h * h)
            out[i, j] = mixed
            out[j, i] = mixed
    return out


def gradient(f, x, h, order=4):
    """First partial derivatives of scalar ``f`` at 1-d point ``x``."""
    x = np.asarray(x, dtype=float)
    n = x.size
    out = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        if order == 4:
            out[i] = (-f(x + 2 * e) + 8 * f(x + e)
                      - 8 * f(x - e) + f(x - 2 * e)) / (12.0 * h)
        else:
            out[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return out


def array_derivative(f, x, h, order=4):
    """Stacked partials of an array-valued ``f``: result[i] = d f / d x^i.

    ``f(x)`` may return an ndarray of any shape; the output has shape
    ``(n,) + f(x).shape``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    cols = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        if order == 4:
            d = (-f(x + 2 * e) + 8.0 * f(x + e)
                 - 8.0 * f(x - e) + f(x - 2 * e)) / (12.0 * h)
        else:
            d = (f(x + e) - f(x - e)) / (2.0 * h)
        cols.append(d)
    return np.stack(cols, axis=0)


def batch_array_derivative(f, X, h, order=4):
    """Like :func:`array_derivative` for a batch of points.

    ``X`` has shape (B, n); ``f`` maps (B, n) -> (B, ...).  Returns an
    array of shape (B, n, ...) with result[:, i] = d f / d x^i.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[1]
    cols = []
    for i in range(n):
        E = np.zeros_like(X)
        E[:, i] = h
        if order == 4:
            d = (-f(X + 2 * E) + 8.0 * f(X + E)
                 - 8.0 * f(X - E) + f(X - 2 * E)) / (12.0 * h)
        else:
            d = (f(X + E) - f(X - E)) / (2.0 * h)
        cols.append(d)
    return np.stack(cols, axis=1)
