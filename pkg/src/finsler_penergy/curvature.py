"""Curvature of the nonlinear connection (internal computational core).

The public curvature API lives in :mod:`finsler_penergy.jacobi`; this module
holds the batched pipeline shared with the index-form assembly so the two
modules stay import-cycle free.

Convention:  R^i_jk = delta_k N^i_j - delta_j N^i_k  where
delta_k = d/dx^k - N^l_k d/dy^l, so that along a curve the operator
R2(X, c')c' = R^l_jk c'^j X^k d_l reproduces K {|c'|^2 X - g(X, c') c'} on
constant-curvature built-ins with K > 0.
"""

from __future__ import annotations

import numpy as np

from . import numdiff
from .connection import _nonlinear_batch
from .errors import ZeroVelocity
from .metric import EPS_V, FinslerMetric


def curvature_tensor_batch(metric: FinslerMetric, X, Y) -> np.ndarray:
    """R^i_jk at a batch of (x, y); result shape (B, n, n, n), antisymmetric in (j, k)."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    norms = np.linalg.norm(Y, axis=1)
    if np.any(norms < EPS_V):
        raise ZeroVelocity("curvature needs |y| above the floor")
    Yh = Y / norms[:, None]

    N0 = _nonlinear_batch(metric, X, Yh)
    dN_dx = numdiff.batch_array_derivative(
        lambda Xd: _nonlinear_batch(metric, Xd, Yh), X, numdiff.H_CURV)
    dN_dy = numdiff.batch_array_derivative(
        lambda Yd: _nonlinear_batch(metric, X, Yd), Yh, numdiff.H_CURV)

    # delta_k N^i_j = d_k N^i_j - N^l_k dN^i_j/dy^l
    horiz = dN_dx - np.einsum("blk,blij->bkij", N0, dN_dy)
    R = np.einsum("bkij->bijk", horiz) - np.einsum("bjik->bijk", horiz)
    return R * norms[:, None, None, None]


def r2_apply_batch(metric: FinslerMetric, X, V, W, R=None) -> np.ndarray:
    """R2(W, c')c' = R^l_jk v^j W^k at a batch of points with velocity V."""
    if R is None:
        R = curvature_tensor_batch(metric, X, V)
    return np.einsum("bljk,bj,bk->bl", R, np.asarray(V, float), np.asarray(W, float))


def r2_lowered_batch(metric: FinslerMetric, X, V, A, B, g=None, R=None) -> np.ndarray:
    """Lowered pairing g(R2(B, c')c', A) for field batches A, B along V."""
    if g is None:
        g = metric.raw_tensor_batch(X, V)
    W = r2_apply_batch(metric, X, V, B, R=R)
    return np.einsum("bi,bij,bj->b", np.asarray(A, float), g, W)


def frame_curvature_matrix(metric: FinslerMetric, X, V, frame, g=None, R=None) -> np.ndarray:
    """Matrix R_ab(t) = g(R2(E_b, c')c', E_a) over a frame along a curve.

    ``frame`` has shape (B, n_frame, n); the result is (B, n_frame, n_frame)
    and is symmetric up to pipeline noise.
    """
    if R is None:
        R = curvature_tensor_batch(metric, X, V)
    if g is None:
        g = metric.raw_tensor_batch(X, V)
    lowered = np.einsum("bml,bljk,bj->bmk", g, R, np.asarray(V, float))
    return np.einsum("bam,bmk,bck->bac", frame, lowered, frame)
