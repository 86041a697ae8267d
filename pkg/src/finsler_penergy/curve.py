"""Discretized piecewise-smooth curves and the p-energy / length functionals.

Curves live on a uniform parameter grid over [0, 1] with fixed endpoints.
Corners are allowed only at designated junction nodes; each smooth segment
keeps its own one-sided velocities there so jump quantities remain
computable.  All derivative stencils are second order; the quadrature is
composite Simpson per segment.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .errors import GridTooCoarse, ZeroVelocity
from .metric import EPS_V, FinslerMetric


@dataclass(frozen=True)
class PEnergyValue:
    """Value of the p-energy with a crude quadrature error estimate."""

    p: float
    value: float
    quadrature_error_estimate: float


@dataclass(frozen=True)
class DiscretizedCurve:
    """Nodes of a piecewise-smooth curve on a uniform [0, 1] grid.

    ``nodes`` has shape (N + 1, n).  ``breaks`` lists interior node indices
    where the curve may have a corner; the node is shared by both adjacent
    segments.  Every segment must contain at least 5 nodes and an even
    number of intervals (composite Simpson requirement).
    """

    nodes: np.ndarray
    breaks: tuple = ()

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "breaks", tuple(int(b) for b in self.breaks))
        if nodes.ndim != 2 or nodes.shape[0] < 5 or nodes.shape[1] < 1:
            raise ValueError("nodes must be (N+1, n) with N >= 4")
        if not np.all(np.isfinite(nodes)):
            raise ValueError("curve nodes must be finite")
        last = self.num_intervals
        if any(not 0 < b < last for b in self.breaks):
            raise ValueError(f"junction indices {self.breaks} must lie inside (0, {last})")
        if list(self.breaks) != sorted(set(self.breaks)):
            raise ValueError(f"junction indices {self.breaks} must be strictly increasing")
        prev = 0
        for b in self.breaks + (last,):
            seg_len = b - prev
            if seg_len < 4:
                raise GridTooCoarse(
                    f"segment [{prev}, {b}] has {seg_len + 1} nodes; need >= 5")
            if seg_len % 2:
                raise ValueError(
                    f"segment [{prev}, {b}] has odd interval count {seg_len}")
            prev = b

    # -- basic geometry --------------------------------------------------------

    @property
    def num_intervals(self) -> int:
        return self.nodes.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def h(self) -> float:
        return 1.0 / self.num_intervals

    @property
    def params(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nodes.shape[0])

    @property
    def x0(self) -> np.ndarray:
        return self.nodes[0]

    @property
    def x1(self) -> np.ndarray:
        return self.nodes[-1]

    def segment_bounds(self):
        """Node index pairs (start, stop) of each smooth segment, inclusive."""
        cuts = (0,) + self.breaks + (self.num_intervals,)
        return [(cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1)]

    def segment_derivatives(self, lo: int, hi: int):
        """Velocity and acceleration arrays on nodes lo..hi of one segment.

        Central differences inside, one-sided 3/4-point stencils at the
        segment ends; all second-order accurate.
        """
        S = self.nodes[lo:hi + 1]
        h = self.h
        V = np.empty_like(S)
        V[1:-1] = (S[2:] - S[:-2]) / (2.0 * h)
        V[0] = (-3.0 * S[0] + 4.0 * S[1] - S[2]) / (2.0 * h)
        V[-1] = (3.0 * S[-1] - 4.0 * S[-2] + S[-3]) / (2.0 * h)
        A = np.empty_like(S)
        A[1:-1] = (S[2:] - 2.0 * S[1:-1] + S[:-2]) / (h * h)
        A[0] = (2.0 * S[0] - 5.0 * S[1] + 4.0 * S[2] - S[3]) / (h * h)
        A[-1] = (2.0 * S[-1] - 5.0 * S[-2] + 4.0 * S[-3] - S[-4]) / (h * h)
        return V, A

    def with_nodes(self, nodes) -> "DiscretizedCurve":
        return DiscretizedCurve(nodes, self.breaks)


def line(x0, x1, n_intervals: int = 200) -> DiscretizedCurve:
    """Straight chart-coordinate line from x0 to x1."""
    x0 = np.asarray(x0, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    t = np.linspace(0.0, 1.0, n_intervals + 1)[:, None]
    return DiscretizedCurve((1.0 - t) * x0 + t * x1)


def from_function(fn, n_intervals: int = 200, breaks=()) -> DiscretizedCurve:
    """Sample a callable t -> coords (vectorised over t) on the uniform grid."""
    t = np.linspace(0.0, 1.0, n_intervals + 1)
    nodes = np.asarray(fn(t), dtype=float)
    if nodes.shape[0] != t.size:
        nodes = nodes.T
    return DiscretizedCurve(nodes, breaks)


def velocity(curve: DiscretizedCurve, k: int, side: str = "auto") -> np.ndarray:
    """Velocity at node ``k``; at a junction the side must be given."""
    N = curve.num_intervals
    if not 0 <= k <= N:
        raise IndexError(f"node index {k} out of range 0..{N}")
    if k in curve.breaks and side == "auto":
        raise ValueError(f"node {k} is a junction; pass side='left' or 'right'")
    for lo, hi in curve.segment_bounds():
        if lo <= k <= hi:
            if k == hi and side == "right" and hi != N:
                continue  # take the next segment's one-sided value
            V, _ = curve.segment_derivatives(lo, hi)
            return V[k - lo]
    raise IndexError(k)


def _segment_speeds(metric: FinslerMetric, curve: DiscretizedCurve, lo, hi):
    V, _ = curve.segment_derivatives(lo, hi)
    speeds = metric.eval_F_batch(curve.nodes[lo:hi + 1], V)
    return speeds


def _simpson(values: np.ndarray, h: float) -> float:
    w = np.ones(values.shape[0])
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float(w @ values) * h / 3.0


def _trapezoid(values: np.ndarray, h: float) -> float:
    return float(h * (np.sum(values) - 0.5 * (values[0] + values[-1])))


def p_energy(metric: FinslerMetric, curve: DiscretizedCurve, p: float) -> PEnergyValue:
    """Composite-Simpson value of the p-energy integral of ``curve``.

    Rejects irregular curves (any node speed under the velocity floor)
    instead of clamping: for p < 0 a clamped value would fabricate a finite
    energy where the integral diverges.
    """
    if p == 0:
        raise ValueError("p must be nonzero")
    total = 0.0
    err = 0.0
    for lo, hi in curve.segment_bounds():
        speeds = _segment_speeds(metric, curve, lo, hi)
        if np.min(speeds) < EPS_V:
            raise ZeroVelocity(
                f"curve speed {np.min(speeds):.3e} under the floor {EPS_V:.1e}; "
                "p-energy undefined for irregular curves")
        integrand = speeds ** p
        total += _simpson(integrand, curve.h)
        err += abs(_simpson(integrand, curve.h) - _trapezoid(integrand, curve.h))
    return PEnergyValue(p, total, err)


def length(metric: FinslerMetric, curve: DiscretizedCurve) -> float:
    """Curve length; identical to the p-energy at p = 1."""
    return p_energy(metric, curve, 1.0).value


def hoelder_gap(metric: FinslerMetric, curve: DiscretizedCurve, p: float) -> float:
    """E_p(c) - L(c)^p.

    Nonnegative for p > 1 and p < 0, nonpositive for 0 < p < 1, zero exactly
    on constant-speed curves.
    """
    return p_energy(metric, curve, p).value - length(metric, curve) ** p


def speed_spread(metric: FinslerMetric, curve: DiscretizedCurve) -> float:
    """Relative spread (max - min) / mean of node speeds over all segments."""
    all_speeds = [
        _segment_speeds(metric, curve, lo, hi) for lo, hi in curve.segment_bounds()
    ]
    s = np.concatenate(all_speeds)
    return float((np.max(s) - np.min(s)) / np.mean(s))


def reparametrize_constant_speed(metric: FinslerMetric,
                                 curve: DiscretizedCurve) -> DiscretizedCurve:
    """Resample a single-segment curve to uniform speed, preserving its image.

    Node speeds of the result agree to within a fraction of a percent; the
    length is preserved to the quadrature tolerance.
    """
    if curve.breaks:
        raise ValueError("constant-speed reparametrization needs a single segment")
    t = curve.params
    spline = CubicSpline(t, curve.nodes, axis=0)
    dense = np.linspace(0.0, 1.0, 4 * curve.num_intervals + 1)
    vel = spline(dense, 1)
    speeds = metric.eval_F_batch(spline(dense), vel)
    if np.min(speeds) < EPS_V:
        raise ZeroVelocity("cannot reparametrize an irregular curve")
    ds = np.diff(dense) * 0.5 * (speeds[:-1] + speeds[1:])
    arc = np.concatenate([[0.0], np.cumsum(ds)])
    t_of_s = PchipInterpolator(arc, dense)
    targets = np.linspace(0.0, arc[-1], curve.num_intervals + 1)
    new_t = t_of_s(targets)
    new_nodes = spline(new_t)
    new_nodes[0] = curve.nodes[0]
    new_nodes[-1] = curve.nodes[-1]
    return DiscretizedCurve(new_nodes)


# -- import/export --------------------------------------------------------------

CSV_FLOAT_FMT = "%.15g"


def write_csv(curve: DiscretizedCurve, path) -> None:
    """Write ``t,x1,...,xn`` rows, one node per row, 15 significant digits."""
    t = curve.params
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"x{i + 1}" for i in range(curve.dim)])
        for k in range(curve.nodes.shape[0]):
            writer.writerow([CSV_FLOAT_FMT % t[k]]
                            + [CSV_FLOAT_FMT % v for v in curve.nodes[k]])


def read_csv(path) -> DiscretizedCurve:
    """Read a single-segment curve from the CSV node format."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "t":
        raise ValueError(f"{path}: expected header starting with 't'")
    data = np.array([[float(v) for v in row] for row in rows[1:]])
    t = data[:, 0]
    if not np.allclose(np.diff(t), t[1] - t[0], rtol=1e-6, atol=1e-12):
        raise ValueError(f"{path}: parameter column must be a uniform grid")
    return DiscretizedCurve(data[:, 1:])


def to_json_obj(curve: DiscretizedCurve) -> dict:
    """Segment-preserving JSON form: junction nodes repeat in both segments."""
    segments = [curve.nodes[lo:hi + 1].tolist() for lo, hi in curve.segment_bounds()]
    return {"params": curve.params.tolist(), "segments": segments}


def validate_curve_obj(obj: dict) -> None:
    """Check a parsed curve document against the packaged JSON schema."""
    import importlib.resources

    import jsonschema

    schema = json.loads(
        importlib.resources.files("finsler_penergy.schemas")
        .joinpath("curve.schema.json").read_text())
    jsonschema.validate(obj, schema)


def from_json_obj(obj: dict) -> DiscretizedCurve:
    validate_curve_obj(obj)
    segs = [np.asarray(s, dtype=float) for s in obj["segments"]]
    for a, b in zip(segs[:-1], segs[1:]):
        if not np.allclose(a[-1], b[0]):
            raise ValueError("segments do not share junction nodes")
    nodes = np.concatenate([segs[0]] + [s[1:] for s in segs[1:]])
    breaks = []
    acc = 0
    for s in segs[:-1]:
        acc += s.shape[0] - 1
        breaks.append(acc)
    cur = DiscretizedCurve(nodes, tuple(breaks))
    params = np.asarray(obj.get("params", cur.params), dtype=float)
    if params.shape[0] != nodes.shape[0]:
        raise ValueError("params length disagrees with node count")
    return cur


def write_json(curve: DiscretizedCurve, path) -> None:
    with open(path, "w") as fh:
        json.dump(to_json_obj(curve), fh)


def read_json(path) -> DiscretizedCurve:
    with open(path) as fh:
        return from_json_obj(json.load(fh))
