"""Finsler metrics: axiom validation, fundamental tensor, scalar products.

A :class:`FinslerMetric` bundles the fundamental function F(x, y) with the
chart bookkeeping the rest of the engine needs.  Everything downstream
(connection coefficients, energies, curvature) is derived from F and, when
supplied, the analytic fundamental tensor.

Axioms checked by :func:`validate_metric`:

* F1 -- positivity of F away from y = 0,
* F2 -- absolute homogeneity F(x, l*y) = |l| F(x, y),
* F3 -- positive definiteness of the fundamental tensor
  g_ij = 0.5 * d^2(F^2)/dy^i dy^j,
* the energy identity F^2 = g_ij y^i y^j (a consequence of F2),
* zero-homogeneity of g in y.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ChartDomain, NotPositiveDefinite, ZeroVelocity
from . import numdiff

# Global numerical policy.
EPS_V = 1e-8              # minimum tangent speed accepted anywhere
DEFINITENESS_RTOL = 1e-10  # min eigenvalue must exceed this times max
EPS_POLE = 1e-3           # polar collar excluded from sphere charts
RANDERS_MAX_B = 0.95      # construction-time cap on the drift one-form

# Window of |y| inside which the Hessian engine differentiates at y itself;
# outside it the evaluation point is rescaled to unit norm (legal by F2,
# keeps the stencil away from the zero section and well conditioned).
_NORM_WINDOW = (0.5, 2.0)


@dataclass
class FinslerMetric:
    """Contract a metric must satisfy to drive the engine.

    Parameters
    ----------
    dim : int
        Chart dimension n >= 2.
    name : str
        Identifier used in reports and the CLI catalog.
    F : callable
        Fundamental function; maps (x, y) 1-d arrays to a float.
    F_batch : callable, optional
        Vectorised variant mapping (B, n), (B, n) -> (B,).  A loop over
        ``F`` is used when absent.
    fundamental_tensor : callable, optional
        Analytic g(x, y) -> (n, n).  When absent the finite-difference
        Hessian engine supplies g.
    fundamental_tensor_batch : callable, optional
        Vectorised variant, (B, n), (B, n) -> (B, n, n).
    chart_domain : callable, optional
        Predicate x -> bool; defaults to "everything is valid".
    sample_box : (lo, hi) pair, optional
        Coordinate box used by randomized validation.
    constant_curvature : float, optional
        Set for built-ins whose flag curvature is a known constant;
        drives the closed-form cross-checks and extremum bounds.
    params : dict
        Construction parameters, echoed into reports.
    """

    dim: int
    name: str
    F: object
    F_batch: object = None
    fundamental_tensor: object = None
    fundamental_tensor_batch: object = None
    chart_domain: object = None
    sample_box: tuple = None
    constant_curvature: float | None = None
    reversible: bool = True
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("manifold dimension must be >= 2")
        if self.sample_box is None:
            self.sample_box = (-2.0 * np.ones(self.dim), 2.0 * np.ones(self.dim))

    # -- low-level evaluation -------------------------------------------------

    def eval_F(self, x, y) -> float:
        return float(self.F(np.asarray(x, float), np.asarray(y, float)))

    def eval_F_batch(self, X, Y) -> np.ndarray:
        X = np.asarray(X, float)
        Y = np.asarray(Y, float)
        if self.F_batch is not None:
            return np.asarray(self.F_batch(X, Y), float)
        return np.array([self.F(x, y) for x, y in zip(X, Y)], float)

    def in_domain(self, x) -> bool:
        return True if self.chart_domain is None else bool(self.chart_domain(np.asarray(x, float)))

    def has_analytic_tensor(self) -> bool:
        return self.fundamental_tensor is not None

    def raw_tensor(self, x, y) -> np.ndarray:
        """g(x, y) without precondition or definiteness checks."""
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if self.fundamental_tensor is not None:
            return np.asarray(self.fundamental_tensor(x, y), float)
        return _fd_tensor(self, x, y)

    def raw_tensor_batch(self, X, Y) -> np.ndarray:
        X = np.asarray(X, float)
        Y = np.asarray(Y, float)
        if self.fundamental_tensor_batch is not None:
            return np.asarray(self.fundamental_tensor_batch(X, Y), float)
        return np.stack([self.raw_tensor(x, y) for x, y in zip(X, Y)])


def check_point(metric: FinslerMetric, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (metric.dim,):
        raise ValueError(f"point must have shape ({metric.dim},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("point has non-finite coordinates")
    if not metric.in_domain(x):
        raise ChartDomain(f"point {x} outside chart domain of {metric.name}")
    return x


def check_tangent(metric: FinslerMetric, y, floor: float = EPS_V) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (metric.dim,):
        raise ValueError(f"tangent must have shape ({metric.dim},), got {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("tangent has non-finite components")
    if np.linalg.norm(y) < floor:
        raise ZeroVelocity(f"|y| = {np.linalg.norm(y):.3e} below floor {floor:.1e}")
    return y


def _fd_tensor(metric: FinslerMetric, x, y) -> np.ndarray:
    """Hessian-engine fundamental tensor: 0.5 * d^2(F^2)/dy dy.

    Differentiates at y itself when |y| sits in the conditioning window,
    otherwise at y/|y| (identical by zero-homogeneity of g).
    """
    ny = float(np.linalg.norm(y))
    y_eval = y if _NORM_WINDOW[0] <= ny <= _NORM_WINDOW[1] else y / ny

    def f2(v):
        val = metric.eval_F(x, v)
        return val * val

    return 0.5 * numdiff.hessian(f2, y_eval)


def fundamental_tensor(metric: FinslerMetric, x, y) -> np.ndarray:
    """g_ij(x, y), validated: symmetric and positive definite.

    Raises
    ------
    ZeroVelocity, ChartDomain, NotPositiveDefinite
    """
    x = check_point(metric, x)
    y = check_tangent(metric, y)
    g = metric.raw_tensor(x, y)
    g = 0.5 * (g + g.T)
    w = np.linalg.eigvalsh(g)
    if w[0] <= DEFINITENESS_RTOL * max(w[-1], 0.0):
        raise NotPositiveDefinite(
            f"fundamental tensor of {metric.name} at x={x}, y={y}: "
            f"eigenvalues {w}")
    return g


def absolute_energy_check(metric: FinslerMetric, x, y) -> float:
    """Residual |F^2(x,y) - g_ij(x,y) y^i y^j| of the energy identity."""
    x = check_point(metric, x)
    y = check_tangent(metric, y)
    g = fundamental_tensor(metric, x, y)
    f = metric.eval_F(x, y)
    return abs(f * f - float(y @ g @ y))


def scalar_product(metric: FinslerMetric, x, v_ref, X, Y) -> float:
    """Scalar product g_(x, v_ref)(X, Y) along a curve with velocity v_ref."""
    g = fundamental_tensor(metric, x, v_ref)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    return float(X @ g @ Y)


# -- randomized axiom validation ----------------------------------------------

TOL_HOMOGENEITY = 1e-9
TOL_ENERGY_IDENTITY = 1e-6
TOL_G_ZERO_HOMOGENEITY = 1e-6


@dataclass
class CheckResult:
    check: str
    max_violation: float
    tolerance: float
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "max_violation": self.max_violation,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "detail": self.detail,
        }


@dataclass
class ValidationReport:
    metric: str
    samples: int
    seed: int
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "samples": self.samples,
            "seed": self.seed,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }


def _sample_points(metric: FinslerMetric, count: int, rng) -> np.ndarray:
    lo, hi = metric.sample_box
    return rng.uniform(lo, hi, size=(count, metric.dim))


def validate_metric(metric: FinslerMetric, samples: int = 1000,
                    rng_seed: int = 0) -> ValidationReport:
    """Randomized check of F1, F2, F3, the energy identity and g homogeneity.

    Never raises on a failing metric: every violation lands in the report.
    """
    rng = np.random.default_rng(rng_seed)
    X = _sample_points(metric, samples, rng)
    Y = rng.uniform(-2.0, 2.0, size=(samples, metric.dim))
    # keep tangents away from the zero section
    small = np.linalg.norm(Y, axis=1) < 0.1
    Y[small] += 0.5 * np.sign(Y[small] + 1e-3)

    F = metric.eval_F_batch(X, Y)

    # F1: positivity
    min_f = float(np.min(F))
    f1 = CheckResult("F1_positivity", max(0.0, -min_f), 0.0, min_f > 0.0,
                     f"min F = {min_f:.6e}")

    # F2: homogeneity with lambda in [-3, 3] \ (-0.1, 0.1).  Irreversible
    # metrics (Randers with a drift term) only satisfy the positive half,
    # so negative lambdas are skipped for them.
    lam = rng.uniform(0.1, 3.0, size=samples)
    if metric.reversible:
        lam = lam * rng.choice([-1.0, 1.0], size=samples)
    F_scaled = metric.eval_F_batch(X, lam[:, None] * Y)
    rel = np.abs(F_scaled - np.abs(lam) * F) / (1.0 + np.abs(F))
    label = "F2_homogeneity" if metric.reversible else "F2_homogeneity_positive"
    f2 = CheckResult(label, float(np.max(rel)), TOL_HOMOGENEITY,
                     bool(np.max(rel) <= TOL_HOMOGENEITY))

    # F3: positive definiteness of g
    G = metric.raw_tensor_batch(X, Y)
    G = 0.5 * (G + np.swapaxes(G, -1, -2))
    w = np.linalg.eigvalsh(G)
    margin = w[:, 0] - DEFINITENESS_RTOL * np.maximum(w[:, -1], 0.0)
    worst = float(np.min(margin))
    f3 = CheckResult("F3_positive_definite", max(0.0, -worst), 0.0,
                     worst > 0.0, f"worst eigenvalue margin = {worst:.6e}")

    # Energy identity F^2 = g_ij y^i y^j
    quad = np.einsum("bi,bij,bj->b", Y, G, Y)
    res = np.abs(F * F - quad)
    euler = CheckResult("energy_identity", float(np.max(res)), TOL_ENERGY_IDENTITY,
                        bool(np.max(res) <= TOL_ENERGY_IDENTITY))

    # Zero-homogeneity of g in y (positive rescaling only)
    lam_pos = rng.uniform(0.75, 1.5, size=samples)
    G2 = metric.raw_tensor_batch(X, lam_pos[:, None] * Y)
    dg = np.max(np.abs(G2 - G), axis=(1, 2))
    gh = CheckResult("g_zero_homogeneity", float(np.max(dg)), TOL_G_ZERO_HOMOGENEITY,
                     bool(np.max(dg) <= TOL_G_ZERO_HOMOGENEITY))

    return ValidationReport(metric.name, samples, rng_seed, [f1, f2, f3, euler, gh])


# -- built-in catalog -----------------------------------------------------------


def euclidean(dim: int = 2) -> FinslerMetric:
    """Flat Euclidean metric on R^n; F = |y|_2."""
    eye = np.eye(dim)

    def F(x, y):
        return float(np.linalg.norm(y))

    def F_batch(X, Y):
        return np.linalg.norm(Y, axis=1)

    return FinslerMetric(
        dim=dim, name="euclidean", F=F, F_batch=F_batch,
        fundamental_tensor=lambda x, y: eye.copy(),
        fundamental_tensor_batch=lambda X, Y: np.broadcast_to(eye, (len(X), dim, dim)).copy(),
        constant_curvature=0.0,
        params={"dim": dim},
    )


def _sphere_sin_products(theta: np.ndarray) -> np.ndarray:
    """Diagonal weights of the round-sphere chart metric, batched.

    theta has shape (B, n); entry k of the result is prod_{i<k} sin^2(theta_i).
    """
    B, n = theta.shape
    out = np.ones((B, n))
    acc = np.ones(B)
    for k in range(1, n):
        acc = acc * np.sin(theta[:, k - 1]) ** 2
        out[:, k] = acc
    return out


def sphere(radius: float = 1.0, dim: int = 2) -> FinslerMetric:
    """Round sphere of the given radius in polar angles (theta_1..theta_{n-1}, phi).

    The chart excludes a collar of EPS_POLE around each pole.  Constant
    curvature 1/radius^2.
    """
    if radius <= 0:
        raise ValueError("sphere radius must be positive")
    R2 = radius * radius

    def weights(X):
        return R2 * _sphere_sin_products(X)

    def F_batch(X, Y):
        return np.sqrt(np.einsum("bk,bk->b", weights(X), Y * Y))

    def F(x, y):
        return float(F_batch(x[None, :], y[None, :])[0])

    def g_batch(X, Y):
        w = weights(X)
        B, n = X.shape
        G = np.zeros((B, n, n))
        idx = np.arange(n)
        G[:, idx, idx] = w
        return G

    def g(x, y):
        return g_batch(x[None, :], y[None, :])[0]

    def domain(x):
        # all angles but the last must stay off the poles
        t = x[:-1]
        return bool(np.all(t >= EPS_POLE) and np.all(t <= np.pi - EPS_POLE))

    lo = np.full(dim, 0.25)
    hi = np.full(dim, np.pi - 0.25)
    lo[-1], hi[-1] = -np.pi, np.pi

    return FinslerMetric(
        dim=dim, name="sphere", F=F, F_batch=F_batch,
        fundamental_tensor=g, fundamental_tensor_batch=g_batch,
        chart_domain=domain, sample_box=(lo, hi),
        constant_curvature=1.0 / R2,
        params={"radius": radius, "dim": dim},
    )


def randers(a, b, enforce_positivity: bool = True) -> FinslerMetric:
    """Randers metric F = sqrt(a_ij y^i y^j) + b_i y^i with constant data.

    ``a`` must be symmetric positive definite and the a-norm of ``b`` below
    RANDERS_MAX_B (the cap keeps g safely positive definite).  Passing
    ``enforce_positivity=False`` skips the cap so that deliberately broken
    metrics can be fed to :func:`validate_metric`.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = b.size
    if a.shape != (n, n):
        raise ValueError("a and b dimensions disagree")
    if not np.allclose(a, a.T):
        raise ValueError("a must be symmetric")
    if np.linalg.eigvalsh(a)[0] <= 0:
        raise ValueError("a must be positive definite")
    a_inv = np.linalg.inv(a)
    b_norm = float(np.sqrt(b @ a_inv @ b))
    if enforce_positivity and b_norm > RANDERS_MAX_B:
        raise ValueError(
            f"|b|_a = {b_norm:.3f} exceeds {RANDERS_MAX_B}; the metric would "
            "lose positive definiteness under numerical differentiation")

    def F_batch(X, Y):
        alpha = np.sqrt(np.einsum("bi,ij,bj->b", Y, a, Y))
        return alpha + Y @ b

    def F(x, y):
        return float(F_batch(np.atleast_2d(x), y[None, :])[0])

    def g_batch(X, Y):
        alpha = np.sqrt(np.einsum("bi,ij,bj->b", Y, a, Y))
        ell = (Y @ a) / alpha[:, None]
        Fv = alpha + Y @ b
        lb = ell + b[None, :]
        G = (Fv / alpha)[:, None, None] * (a[None, :, :] - ell[:, :, None] * ell[:, None, :])
        G += lb[:, :, None] * lb[:, None, :]
        return G

    def g(x, y):
        return g_batch(x[None, :], y[None, :])[0]

    return FinslerMetric(
        dim=n, name="randers", F=F, F_batch=F_batch,
        fundamental_tensor=g, fundamental_tensor_batch=g_batch,
        constant_curvature=0.0,
        reversible=bool(b_norm == 0.0),
        params={"a": a.tolist(), "b": b.tolist(), "b_norm": b_norm},
    )


def build_metric(name: str, params: dict, strict: bool = True) -> FinslerMetric:
    """Construct a catalog metric from a name and parameter map."""
    name = name.lower()
    if name == "euclidean":
        return euclidean(int(params.get("dim", 2)))
    if name == "sphere":
        return sphere(float(params.get("radius", 1.0)), int(params.get("dim", 2)))
    if name == "randers":
        if "a" in params:
            a = np.asarray(params["a"], dtype=float)
        else:
            a = np.eye(int(params.get("dim", 2)))
        b = np.asarray(params["b"], dtype=float)
        return randers(a, b, enforce_positivity=strict)
    raise ValueError(f"unknown metric '{name}' (catalog: euclidean, sphere, randers)")
