"""Cartan connection coefficients and covariant derivatives along curves.

Coefficient conventions (indices up/down as usual, y-dependence implied):

* formal Christoffel  G^i_jk = 0.5 g^im (d_j g_mk + d_k g_jm - d_m g_jk)
  with plain x-partials;
* nonlinear connection  N^i_j = 0.5 * d/dy^j (G^i_kl y^k y^l);
* horizontal coefficient L^i_jk: same combination built from the horizontal
  derivatives  delta_j = d/dx^j - N^l_j d/dy^l;
* vertical (Cartan) coefficient C^i_jk: same combination from y-partials;
* combined coefficient  G~^i_mk = L^i_mk + C^i_ml N^l_k, which together with
  the curve acceleration realises the covariant derivative
  (DX/dt)^i = dX^i/dt + X^m [G~^i_mk c'^k + C^i_mk c''^k].

The horizontal derivative carries the standard minus sign; the Riemannian
degeneration and the constant-curvature cross-checks in the test suite pin
this convention.

Everything is evaluated at unit-normalised y and rescaled afterwards using
the exact homogeneity degrees (g, G, L: 0; N: +1; C: -1), which keeps every
finite-difference stencil away from the zero section.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numdiff
from .curve import DiscretizedCurve
from .errors import GridTooCoarse, ZeroVelocity
from .metric import EPS_V, FinslerMetric


@dataclass(frozen=True)
class ConnectionSample:
    """All Cartan coefficient values at one (x, y)."""

    x: np.ndarray
    y: np.ndarray
    g: np.ndarray              # (n, n)
    g_inv: np.ndarray          # (n, n)
    gamma_formal: np.ndarray   # (n, n, n), G^i_jk
    nonlinear: np.ndarray      # (n, n),    N^i_j
    cartan_l: np.ndarray       # (n, n, n), L^i_jk
    cartan_c: np.ndarray       # (n, n, n), C^i_jk
    gamma_combined: np.ndarray  # (n, n, n), L + C.N


@dataclass
class VectorFieldAlongCurve:
    """Samples of a vector field on a curve's node grid, shape (N+1, n)."""

    values: np.ndarray
    params: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.params = np.asarray(self.params, dtype=float)
        if self.values.shape[0] != self.params.shape[0]:
            raise ValueError("field sample count does not match the grid")

    @property
    def max_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def vanishes_at_ends(self, tol: float = 0.0) -> bool:
        return (np.max(np.abs(self.values[0])) <= tol
                and np.max(np.abs(self.values[-1])) <= tol)


def field_values(X) -> np.ndarray:
    """Accept either a VectorFieldAlongCurve or a raw (N+1, n) array."""
    return np.asarray(getattr(X, "values", X), dtype=float)


# -- batched coefficient pipeline -------------------------------------------------


def _christoffel_from_dg(g_inv: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """Christoffel-type combination of g-derivatives.

    ``dg[b, m, j, k] = d_m g_jk``; returns (B, n, n, n) with symmetric lower
    indices.
    """
    comb = (np.einsum("bjmk->bmjk", dg) + np.einsum("bkjm->bmjk", dg) - dg)
    return 0.5 * np.einsum("bim,bmjk->bijk", g_inv, comb)


def _raw_g(metric: FinslerMetric):
    def g_of_x(X, Y):
        return metric.raw_tensor_batch(X, Y)
    return g_of_x


def _christoffel_batch(metric: FinslerMetric, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Formal Christoffel G^i_jk at a batch of (x, y); y assumed O(1)-normalised."""
    g = metric.raw_tensor_batch(X, Y)
    g_inv = np.linalg.inv(g)
    dg_dx = numdiff.batch_array_derivative(
        lambda Xd: metric.raw_tensor_batch(Xd, Y), X, numdiff.H_DG)
    return _christoffel_from_dg(g_inv, dg_dx)


def _spray_contraction(metric: FinslerMetric, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """G^i_kl(x, y) y^k y^l, the doubled spray coefficient."""
    gamma = _christoffel_batch(metric, X, Y)
    return np.einsum("bikl,bk,bl->bi", gamma, Y, Y)


def _nonlinear_batch(metric: FinslerMetric, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """N^i_j at normalised y: half the y-gradient of the spray contraction."""
    dspray = numdiff.batch_array_derivative(
        lambda Yd: _spray_contraction(metric, X, Yd), Y, numdiff.H_SPRAY)
    # dspray[b, j, i] = d_j (G^i_00)
    return 0.5 * np.einsum("bji->bij", dspray)


def connection_samples_batch(metric: FinslerMetric, X, Y):
    """All connection coefficients at a batch of (x, y) pairs.

    Returns a dict of batched arrays keyed like ConnectionSample fields.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    norms = np.linalg.norm(Y, axis=1)
    if np.any(norms < EPS_V):
        raise ZeroVelocity("connection coefficients need |y| above the floor")
    Yh = Y / norms[:, None]

    g = metric.raw_tensor_batch(X, Yh)
    g_inv = np.linalg.inv(g)
    dg_dx = numdiff.batch_array_derivative(
        lambda Xd: metric.raw_tensor_batch(Xd, Yh), X, numdiff.H_DG)
    dg_dy = numdiff.batch_array_derivative(
        lambda Yd: metric.raw_tensor_batch(X, Yd), Yh, numdiff.H_DG)

    gamma = _christoffel_from_dg(g_inv, dg_dx)
    cart_c = _christoffel_from_dg(g_inv, dg_dy)
    nonlin = _nonlinear_batch(metric, X, Yh)

    # horizontal derivative of g: delta_j g = d_j g - N^l_j d(g)/dy^l
    dg_h = dg_dx - np.einsum("blj,blmk->bjmk", nonlin, dg_dy)
    cart_l = _christoffel_from_dg(g_inv, dg_h)
    combined = cart_l + np.einsum("biml,blk->bimk", cart_c, nonlin)

    s = norms[:, None, None]
    return {
        "g": g,
        "g_inv": g_inv,
        "gamma_formal": gamma,
        "nonlinear": nonlin * s,
        "cartan_l": cart_l,
        "cartan_c": cart_c / s[..., None],
        "gamma_combined": combined,
    }


def connection_sample(metric: FinslerMetric, x, y) -> ConnectionSample:
    """All Cartan coefficients at a single (x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    batch = connection_samples_batch(metric, x[None, :], y[None, :])
    return ConnectionSample(
        x=x, y=y,
        g=batch["g"][0], g_inv=batch["g_inv"][0],
        gamma_formal=batch["gamma_formal"][0],
        nonlinear=batch["nonlinear"][0],
        cartan_l=batch["cartan_l"][0],
        cartan_c=batch["cartan_c"][0],
        gamma_combined=batch["gamma_combined"][0],
    )


def formal_christoffel(metric: FinslerMetric, x, y) -> np.ndarray:
    return connection_sample(metric, x, y).gamma_formal


def nonlinear_connection(metric: FinslerMetric, x, y) -> np.ndarray:
    return connection_sample(metric, x, y).nonlinear


def cartan_L(metric: FinslerMetric, x, y) -> np.ndarray:
    return connection_sample(metric, x, y).cartan_l


def cartan_C(metric: FinslerMetric, x, y) -> np.ndarray:
    return connection_sample(metric, x, y).cartan_c


# -- covariant derivative along a curve -------------------------------------------


def _field_segment_derivative(values: np.ndarray, lo: int, hi: int, h: float) -> np.ndarray:
    S = values[lo:hi + 1]
    if S.shape[0] < 5:
        raise GridTooCoarse("need at least 5 nodes per segment")
    D = np.empty_like(S)
    D[1:-1] = (S[2:] - S[:-2]) / (2.0 * h)
    D[0] = (-3.0 * S[0] + 4.0 * S[1] - S[2]) / (2.0 * h)
    D[-1] = (3.0 * S[-1] - 4.0 * S[-2] + S[-3]) / (2.0 * h)
    return D


def curve_connection_tables(metric: FinslerMetric, curve: DiscretizedCurve):
    """Per-segment connection data along a curve, cached for reuse.

    Returns a list with one entry per smooth segment:
    ``(lo, hi, V, A, coeffs)`` where V/A are the node velocity and
    acceleration arrays and ``coeffs`` the batch dict from
    :func:`connection_samples_batch` evaluated at (c, c').
    """
    tables = []
    for lo, hi in curve.segment_bounds():
        V, A = curve.segment_derivatives(lo, hi)
        coeffs = connection_samples_batch(metric, curve.nodes[lo:hi + 1], V)
        tables.append((lo, hi, V, A, coeffs))
    return tables


def covariant_derivative(metric: FinslerMetric, curve: DiscretizedCurve,
                         X, tables=None) -> VectorFieldAlongCurve:
    """DX/dt along the curve, sampled on the full node grid.

    Interior nodes carry the advertised second-order accuracy; segment-end
    values use one-sided stencils.  At junction nodes the value of the
    *left* segment wins (both sides are computable via per-segment calls).
    """
    vals = field_values(X)
    if vals.shape != curve.nodes.shape:
        raise ValueError("field shape must match the curve nodes")
    if tables is None:
        tables = curve_connection_tables(metric, curve)
    out = np.empty_like(vals)
    for lo, hi, V, A, coeffs in tables:
        dX = _field_segment_derivative(vals, lo, hi, curve.h)
        Xm = vals[lo:hi + 1]
        M = (np.einsum("bimk,bk->bim", coeffs["gamma_combined"], V)
             + np.einsum("bimk,bk->bim", coeffs["cartan_c"], A))
        seg = dX + np.einsum("bim,bm->bi", M, Xm)
        if lo == 0:
            out[lo:hi + 1] = seg
        else:
            out[lo + 1:hi + 1] = seg[1:]
    return VectorFieldAlongCurve(out, curve.params)


def covariant_derivative_lcn(metric: FinslerMetric, curve: DiscretizedCurve,
                             X) -> VectorFieldAlongCurve:
    """Cross-check form of DX/dt via L, C and N separately.

    Algebraically identical to the combined-coefficient form; exercised in
    tests to catch coefficient wiring mistakes.
    """
    vals = field_values(X)
    out = np.empty_like(vals)
    for lo, hi in curve.segment_bounds():
        V, A = curve.segment_derivatives(lo, hi)
        coeffs = connection_samples_batch(metric, curve.nodes[lo:hi + 1], V)
        dX = _field_segment_derivative(vals, lo, hi, curve.h)
        # delta/dt of the velocity: c'' + N(c, c') c'
        dv = A + np.einsum("bkl,bl->bk", coeffs["nonlinear"], V)
        M = (np.einsum("bimk,bk->bim", coeffs["cartan_l"], V)
             + np.einsum("bimk,bk->bim", coeffs["cartan_c"], dv))
        seg = dX + np.einsum("bim,bm->bi", M, vals[lo:hi + 1])
        if lo == 0:
            out[lo:hi + 1] = seg
        else:
            out[lo + 1:hi + 1] = seg[1:]
    return VectorFieldAlongCurve(out, curve.params)


def metric_compatibility_residual(metric: FinslerMetric, curve: DiscretizedCurve,
                                  X, Y) -> float:
    """Max interior-node defect of d/dt g(X,Y) = g(DX/dt,Y) + g(X,DY/dt).

    Converges at second order in the node spacing; used as a grid-refinement
    diagnostic for the whole connection pipeline.
    """
    Xv = field_values(X)
    Yv = field_values(Y)
    tables = curve_connection_tables(metric, curve)
    dX = covariant_derivative(metric, curve, Xv, tables)
    dY = covariant_derivative(metric, curve, Yv, tables)
    worst = 0.0
    for lo, hi, V, A, coeffs in tables:
        g = coeffs["g"]
        sXY = np.einsum("bi,bij,bj->b", Xv[lo:hi + 1], g, Yv[lo:hi + 1])
        lhs = (sXY[2:] - sXY[:-2]) / (2.0 * curve.h)
        rhs = (np.einsum("bi,bij,bj->b", dX.values[lo:hi + 1], g, Yv[lo:hi + 1])
               + np.einsum("bi,bij,bj->b", Xv[lo:hi + 1], g, dY.values[lo:hi + 1]))
        worst = max(worst, float(np.max(np.abs(lhs - rhs[1:-1]))))
    return worst
