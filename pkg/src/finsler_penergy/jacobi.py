"""Jacobi fields, conjugate points and constant-curvature behaviour.

The Jacobi equation D/dt DX/dt + R2(X, c')c' = 0 is integrated in a
parallel g-orthonormal frame, where the covariant derivatives reduce to
plain time derivatives and the curvature enters through the symmetric
matrix R_ab(t) = g(R2(E_b, c')c', E_a).  Conjugate points are zeros of the
determinant of the orthogonal Jacobi matrix whose columns start at zero
with frame-vector derivatives.

Constant-curvature utilities: the closed-form operator
K {|c'|^2 X - g(X, c') c'}, the extremum bounds driven by the conjugate
count m(c), and the wraparound survey that witnesses the absence of global
extrema on spheres.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize_scalar

from . import curvature, gridode
from .connection import VectorFieldAlongCurve
from .curve import DiscretizedCurve, p_energy, length, speed_spread
from .errors import BadRegime, ChartDomain
from .metric import FinslerMetric, check_point, check_tangent
from .variation import (
    GEO_TOL_DEFAULT,
    curve_connection_tables,
    parallel_frame,
    verify_geodesic,
)

DET_TANGENCY_RTOL = 1e-10   # refined |det| minimum below this times max => zero
REFINEMENT_TOL = 1e-8       # bisection tolerance in t for conjugate parameters


@dataclass(frozen=True)
class CurvatureSample:
    """Contracted curvature R^i_jk at one (x, y); antisymmetric in (j, k)."""

    x: np.ndarray
    y: np.ndarray
    R: np.ndarray


def curvature_R(metric: FinslerMetric, x, y) -> CurvatureSample:
    x = check_point(metric, x)
    y = check_tangent(metric, y)
    R = curvature.curvature_tensor_batch(metric, x[None, :], y[None, :])[0]
    return CurvatureSample(x=x, y=y, R=R)


def R2_operator(metric: FinslerMetric, x, v, X) -> np.ndarray:
    """R2(X, c')c' = R^l_jk v^j X^k with reference velocity v."""
    x = check_point(metric, x)
    v = check_tangent(metric, v)
    X = np.asarray(X, dtype=float)
    return curvature.r2_apply_batch(metric, x[None, :], v[None, :], X[None, :])[0]


def r2_lowered(metric: FinslerMetric, x, v, X, Y) -> float:
    """Curvature pairing g(R2(Y, c')c', X); symmetric under X <-> Y."""
    x = check_point(metric, x)
    v = check_tangent(metric, v)
    return float(curvature.r2_lowered_batch(
        metric, x[None, :], v[None, :],
        np.asarray(X, float)[None, :], np.asarray(Y, float)[None, :])[0])


def constant_curvature_R2(K: float, metric: FinslerMetric, x, v, X) -> np.ndarray:
    """Closed-form K {|v|^2 X - g(X, v) v}; cross-validates the pipeline."""
    x = check_point(metric, x)
    v = check_tangent(metric, v)
    X = np.asarray(X, dtype=float)
    g = metric.raw_tensor(x, v)
    return K * (float(v @ g @ v) * X - float(X @ g @ v) * v)


# -- Jacobi integration ---------------------------------------------------------------


def _frame_curvature_series(metric: FinslerMetric, curve: DiscretizedCurve,
                            frame: np.ndarray, tables) -> np.ndarray:
    N = curve.num_intervals
    n = curve.dim
    out = np.empty((N + 1, n, n))
    for lo, hi, V, A, coeffs in tables:
        sl = slice(lo, hi + 1)
        block = curvature.frame_curvature_matrix(
            metric, curve.nodes[sl], V, frame[sl], g=coeffs["g"])
        out[(lo if lo == 0 else lo + 1):hi + 1] = block[(0 if lo == 0 else 1):]
    return out


def _second_order_rk4(R_series: np.ndarray, u0: np.ndarray, w0: np.ndarray,
                      h: float) -> np.ndarray:
    """Integrate u'' = -R(t) u on the grid; returns u samples.

    ``u0``/``w0`` may be vectors (d,) or matrices (d, m) of stacked columns.
    """
    mids = gridode.interp_half(R_series)
    u = np.asarray(u0, dtype=float)
    w = np.asarray(w0, dtype=float)
    out = np.empty((R_series.shape[0],) + u.shape)
    out[0] = u
    for k in range(R_series.shape[0] - 1):
        R0, Rm, R1 = R_series[k], mids[k], R_series[k + 1]
        ku1, kw1 = w, -R0 @ u
        ku2, kw2 = w + 0.5 * h * kw1, -Rm @ (u + 0.5 * h * ku1)
        ku3, kw3 = w + 0.5 * h * kw2, -Rm @ (u + 0.5 * h * ku2)
        ku4, kw4 = w + h * kw3, -R1 @ (u + h * ku3)
        u = u + (h / 6.0) * (ku1 + 2 * ku2 + 2 * ku3 + ku4)
        w = w + (h / 6.0) * (kw1 + 2 * kw2 + 2 * kw3 + kw4)
        out[k + 1] = u
    return out


def integrate_jacobi(metric: FinslerMetric, curve: DiscretizedCurve,
                     X0, Xdot0, geo_tol: float = GEO_TOL_DEFAULT,
                     tables=None) -> VectorFieldAlongCurve:
    """Jacobi field along a verified geodesic from covariant initial data.

    ``X0`` is the field value and ``Xdot0`` its covariant derivative at
    t = 0; integration runs in the parallel frame with RK4 on the grid.
    """
    v, tables = verify_geodesic(metric, curve, geo_tol, tables)
    frame = parallel_frame(metric, curve, v, tables)
    Rfr = _frame_curvature_series(metric, curve, frame, tables)
    g0 = tables[0][4]["g"][0]
    u0 = np.einsum("am,mk,k->a", frame[0], g0, np.asarray(X0, float))
    w0 = np.einsum("am,mk,k->a", frame[0], g0, np.asarray(Xdot0, float))
    u = _second_order_rk4(Rfr, u0, w0, curve.h)
    values = np.einsum("ba,ban->bn", u, frame)
    return VectorFieldAlongCurve(values, curve.params)


@dataclass
class JacobiSolution:
    """Orthogonal Jacobi matrix J(t): columns vanish at t = 0 and start with
    unit frame derivatives; conjugate parameters are zeros of det J."""

    params: np.ndarray
    components: np.ndarray        # (N+1, n-1, n-1), frame components
    determinant_series: np.ndarray

    def column_field(self, frame: np.ndarray, j: int) -> np.ndarray:
        return np.einsum("ba,ban->bn", self.components[:, :, j],
                         frame[:, 1:, :])


def orthogonal_jacobi_matrix(metric: FinslerMetric, curve: DiscretizedCurve,
                             geo_tol: float = GEO_TOL_DEFAULT,
                             tables=None) -> JacobiSolution:
    v, tables = verify_geodesic(metric, curve, geo_tol, tables)
    frame = parallel_frame(metric, curve, v, tables)
    Rfr = _frame_curvature_series(metric, curve, frame, tables)
    n = curve.dim
    R_orth = Rfr[:, 1:, 1:]
    u = _second_order_rk4(R_orth, np.zeros((n - 1, n - 1)), np.eye(n - 1), curve.h)
    dets = np.linalg.det(u)
    return JacobiSolution(curve.params.copy(), u, dets)


@dataclass
class ConjugateReport:
    """Conjugate parameters in (0, 1) with multiplicities and count m.

    Interior conjugacies drive the extremum bounds; a conjugate endpoint at
    t = 1 is reported separately because the variational classification
    degenerates there.
    """

    conjugate_params: list
    multiplicities: list
    m: int
    refinement_tol: float
    endpoint_conjugate: bool = False
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "conjugate_params": list(self.conjugate_params),
            "multiplicities": list(self.multiplicities),
            "m": self.m,
            "refinement_tol": self.refinement_tol,
            "endpoint_conjugate": self.endpoint_conjugate,
            "notes": list(self.notes),
        }


def find_conjugate_points(metric: FinslerMetric, curve: DiscretizedCurve,
                          geo_tol: float = GEO_TOL_DEFAULT,
                          refinement_tol: float = REFINEMENT_TOL,
                          tables=None) -> ConjugateReport:
    """Locate zeros of the orthogonal Jacobi determinant on (0, 1).

    Sign changes are bracketed and bisected to ``refinement_tol``;
    tangency zeros (even multiplicity, no sign change) are caught by
    refining local minima of |det| and accepting those below
    DET_TANGENCY_RTOL times the series maximum.  Multiplicities come from
    the singular values of the Jacobi matrix at the zero.
    """
    sol = orthogonal_jacobi_matrix(metric, curve, geo_tol, tables)
    t = sol.params
    dets = sol.determinant_series
    ref = float(np.max(np.abs(dets)))
    if ref == 0.0:
        return ConjugateReport([], [], 0, refinement_tol,
                               notes=["determinant identically zero"])
    spline = CubicSpline(t, dets)
    comp_spline = CubicSpline(t, sol.components.reshape(t.size, -1))
    n_cols = sol.components.shape[2]

    sv_ref = float(np.max(np.linalg.svd(
        sol.components.reshape(t.size, n_cols, n_cols), compute_uv=False)))

    def min_sv_sq(s: float) -> float:
        J = comp_spline(s).reshape(n_cols, n_cols)
        return float(np.min(np.linalg.svd(J, compute_uv=False)) ** 2)

    found = []
    notes = []
    # skip the structural zero at t = 0: start past the first node
    for k in range(1, t.size - 1):
        a, b = dets[k], dets[k + 1]
        if a == 0.0:
            found.append((t[k], False))
        elif a * b < 0.0:
            root = brentq(spline, t[k], t[k + 1], xtol=refinement_tol)
            found.append((float(root), False))
    # even-multiplicity zeros touch without a sign change: refine local
    # minima of |det| and accept when either the determinant collapses or
    # the smallest singular value does (the det criterion alone is blind
    # once interpolation error exceeds the tangency threshold)
    absd = np.abs(dets)
    for k in range(2, t.size - 1):
        if not (absd[k] <= absd[k - 1] and absd[k] <= absd[k + 1]):
            continue
        if absd[k] > 1e-3 * ref:
            continue
        if any(abs(t[k] - r) < 3.0 * curve.h for r, _ in found):
            continue
        res = minimize_scalar(min_sv_sq, bounds=(t[k - 1], t[k + 1]),
                              method="bounded",
                              options={"xatol": refinement_tol * 0.1})
        root = float(res.x)
        det_small = abs(float(spline(root))) <= DET_TANGENCY_RTOL * ref
        sv_small = np.sqrt(float(res.fun)) <= 1e-5 * sv_ref
        if det_small or sv_small:
            found.append((root, True))
            notes.append(f"tangency zero at t={root:.9f} (no sign change)")

    found.sort()
    params = []
    mults = []
    for root, _tangent in found:
        if root >= 1.0 - 10.0 * refinement_tol:
            continue
        if params and abs(root - params[-1]) < 10.0 * refinement_tol:
            continue
        J = comp_spline(root).reshape(n_cols, n_cols)
        sv = np.linalg.svd(J, compute_uv=False)
        mult = max(1, int(np.sum(sv <= 1e-5 * sv_ref)))
        params.append(root)
        mults.append(mult)

    endpoint = abs(dets[-1]) <= 1e-8 * ref
    if endpoint:
        notes.append("t = 1 is conjugate to t = 0 (endpoint degeneracy)")
    return ConjugateReport(params, mults, len(params), refinement_tol,
                           endpoint_conjugate=endpoint, notes=notes)


# -- constant-curvature results ---------------------------------------------------------


def ep_extremum_bounds(K: float, m_count: int, p: float) -> tuple:
    """Two-sided bounds on E_p at a global extremum with m interior conjugacies.

    For p < 0 the value lies in [((m+1) pi / sqrt(K))^p, (m pi / sqrt(K))^p];
    for p in (0, 1) in [(m pi / sqrt(K))^p, ((m+1) pi / sqrt(K))^p].
    """
    if not (p < 0.0 or 0.0 < p < 1.0):
        raise BadRegime(f"extremum bounds need p in (-inf,0) or (0,1); got {p}")
    if K <= 0.0:
        raise ValueError("extremum bounds need constant curvature K > 0")
    if m_count < 1:
        raise ValueError("extremum bounds need at least one conjugate point")
    lo_len = m_count * np.pi / np.sqrt(K)
    hi_len = (m_count + 1) * np.pi / np.sqrt(K)
    if p < 0.0:
        return (hi_len ** p, lo_len ** p)
    return (lo_len ** p, hi_len ** p)


# -- sphere embedding helpers and the wraparound survey ----------------------------------


def _sphere_embed(coords: np.ndarray) -> np.ndarray:
    """Chart angles (B, n) -> unit vectors (B, n+1) for the polar chart."""
    B, n = coords.shape
    out = np.empty((B, n + 1))
    prod = np.ones(B)
    for j in range(n - 1):
        out[:, j] = prod * np.cos(coords[:, j])
        prod = prod * np.sin(coords[:, j])
    out[:, n - 1] = prod * np.cos(coords[:, n - 1])
    out[:, n] = prod * np.sin(coords[:, n - 1])
    return out


def _sphere_chart(points: np.ndarray) -> np.ndarray:
    """Unit vectors (B, n+1) -> chart angles (B, n), azimuth unwrapped."""
    B, m = points.shape
    n = m - 1
    coords = np.empty((B, n))
    for j in range(n - 1):
        tail = np.linalg.norm(points[:, j + 1:], axis=1)
        coords[:, j] = np.arctan2(tail, points[:, j])
    coords[:, n - 1] = np.unwrap(np.arctan2(points[:, n], points[:, n - 1]))
    return coords


def great_circle_arc(metric: FinslerMetric, x0, x1, extra_wraps: int = 0,
                     n_intervals: int = 400) -> DiscretizedCurve:
    """Great-circle geodesic between two chart points with extra windings.

    Built from the closed-form circle in the embedding and mapped back to
    the chart; raises ChartDomain if the circle meets the polar collar.
    """
    if metric.name != "sphere":
        raise ValueError("great-circle construction needs the sphere built-in")
    x0 = check_point(metric, x0)
    x1 = check_point(metric, x1)
    u0 = _sphere_embed(x0[None, :])[0]
    u1 = _sphere_embed(x1[None, :])[0]
    ca = float(np.clip(u0 @ u1, -1.0, 1.0))
    if abs(ca) > 1.0 - 1e-12:
        raise ValueError("endpoints coincide or are antipodal; the great "
                         "circle through them is not unique")
    delta = float(np.arccos(ca))
    w = u1 - ca * u0
    w = w / np.linalg.norm(w)
    total = delta + 2.0 * np.pi * extra_wraps
    # domain check on a grid fine enough to resolve the polar collar: a
    # crossing between nodes would silently kink the chart representation
    from .metric import EPS_POLE
    dense_n = max(n_intervals, int(np.ceil(total / (0.5 * EPS_POLE))))
    s_dense = np.linspace(0.0, total, dense_n + 1)
    emb_dense = np.cos(s_dense)[:, None] * u0 + np.sin(s_dense)[:, None] * w
    coords_dense = _sphere_chart(emb_dense)
    for j in range(coords_dense.shape[1] - 1):
        tmin = float(np.min(coords_dense[:, j]))
        tmax = float(np.max(coords_dense[:, j]))
        if tmin < EPS_POLE or tmax > np.pi - EPS_POLE:
            frac = float(np.argmin(coords_dense[:, j])) / dense_n
            raise ChartDomain(
                f"great circle enters the polar collar (angle {j + 1}) "
                f"near t = {frac:.3f}")
    s = np.linspace(0.0, total, n_intervals + 1)
    emb = np.cos(s)[:, None] * u0 + np.sin(s)[:, None] * w
    coords = _sphere_chart(emb)
    # land exactly on the requested endpoints (unwrap can shift the azimuth
    # branch by a multiple of 2 pi)
    coords[:, -1] += x0[-1] - coords[0, -1]
    return DiscretizedCurve(coords)


def sphere_wraparound_survey(metric: FinslerMetric, x0, x1, wraps: int,
                             p_list, n_intervals: int = 400) -> list:
    """Great-circle family with 0..wraps extra windings between two points.

    Each row reports the length, constant speed, interior conjugate count
    m(c) and the p-energies.  With growing winding number m(c) increases
    without bound while E_p grows for p in (0, 1) and decays toward zero
    for p < 0: the numerical witness that the p-energy has no global
    extremum on the sphere in those regimes.
    """
    rows = []
    for k in range(wraps + 1):
        arc = great_circle_arc(metric, x0, x1, extra_wraps=k,
                               n_intervals=n_intervals)
        tables = curve_connection_tables(metric, arc)
        report = find_conjugate_points(metric, arc, tables=tables)
        row = {
            "wraps": k,
            "length": length(metric, arc),
            "speed": length(metric, arc),
            "speed_spread": speed_spread(metric, arc),
            "m": report.m,
            "endpoint_conjugate": report.endpoint_conjugate,
            "conjugate_params": list(report.conjugate_params),
        }
        for p in p_list:
            row[f"E_p={p:g}"] = p_energy(metric, arc, p).value
        rows.append(row)
    return rows
