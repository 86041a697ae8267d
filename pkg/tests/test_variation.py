import numpy as np
import pytest

from finsler_penergy import BadRegime, NoConvergence, NotAGeodesic
from finsler_penergy import curve as fc
from finsler_penergy import variation as fv
from finsler_penergy import jacobi as fj

from conftest import equator_arc, smooth_vanishing_field, tilted_circle, warped_line


# -- geodesic residual ---------------------------------------------------------


def test_line_residual_tiny(euclid2):
    c = fc.line([0, 0], [1, 1], 100)
    res = fv.geodesic_residual(euclid2, c)
    assert fv.interior_max_norm(c, res.values) < 1e-10


def test_equator_residual_small(sphere1):
    arc = equator_arc(2.0, 200)
    res = fv.geodesic_residual(sphere1, arc)
    assert fv.interior_max_norm(arc, res.values) < 1e-8


def test_non_great_circle_residual_bounded_away(sphere1):
    # theta = pi/3 circle: covariant acceleration has norm
    # |sin(th)cos(th)| (2 pi)^2 independent of the grid
    expected = np.sin(np.pi / 3) * np.cos(np.pi / 3) * (2 * np.pi) ** 2
    for n in (100, 200, 400):
        c = fc.from_function(
            lambda t: np.stack([np.full_like(t, np.pi / 3), 2 * np.pi * t], axis=1), n)
        res = fv.geodesic_residual(sphere1, c)
        worst = fv.interior_max_norm(c, res.values)
        assert abs(worst - expected) / expected < 0.01


def test_residual_second_order_on_tilted_circle(sphere1):
    res = {}
    for n in (100, 200):
        c = tilted_circle(n)
        r = fv.geodesic_residual(sphere1, c)
        res[n] = fv.interior_max_norm(c, r.values)
    assert 3.0 <= res[100] / res[200] <= 5.0


# -- shooting ---------------------------------------------------------------------


def test_shoot_euclidean_line(euclid2):
    c = fv.shoot_geodesic(euclid2, [0, 0], [1, 2], 1.0, 200)
    assert np.allclose(c.nodes[-1], [1, 2], atol=1e-12)
    assert np.max(np.abs(c.nodes - np.outer(c.params, [1, 2]))) < 1e-12


def test_shoot_sphere_equator(sphere1):
    c = fv.shoot_geodesic(sphere1, [np.pi / 2, 0.0], [0.0, 1.0], np.pi, 200)
    assert np.allclose(c.nodes[-1], [np.pi / 2, np.pi], atol=1e-9)
    assert fc.speed_spread(sphere1, c) < 1e-8


def test_shoot_randers_constant_speed(randers_half):
    rng = np.random.default_rng(8)
    x0 = rng.uniform(-0.5, 0.5, 2)
    y0 = rng.uniform(-1, 1, 2) + np.array([0.5, 0])
    c = fv.shoot_geodesic(randers_half, x0, y0, 1.0, 200)
    assert fc.speed_spread(randers_half, c) < 1e-6
    res = fv.geodesic_residual(randers_half, c)
    assert fv.interior_max_norm(c, res.values) < 1e-6


def test_shoot_leaves_chart_raises(sphere1):
    from finsler_penergy import ChartDomain
    with pytest.raises(ChartDomain):
        # meridian: heads straight into the pole collar
        fv.shoot_geodesic(sphere1, [np.pi / 2, 0.0], [1.0, 0.0], 2.0, 200)


# -- boundary-value solver ----------------------------------------------------------


def test_bvp_euclidean_straightens_warped_init(euclid2):
    init = fc.from_function(
        lambda u: np.stack([u + 0.1 * np.sin(np.pi * u),
                            u + 0.25 * np.sin(2 * np.pi * u)], axis=1), 200)
    sol = fv.solve_geodesic_bvp(euclid2, [0, 0], [1, 1], 2.0, init=init, tol=1e-8)
    assert fc.p_energy(euclid2, sol, 2).value == pytest.approx(2.0, rel=1e-10)
    assert np.max(np.abs(sol.nodes[:, 0] - sol.nodes[:, 1])) < 1e-8


def test_bvp_sphere_equator(sphere1):
    init = fc.from_function(
        lambda u: np.stack([np.pi / 2 + 0.2 * np.sin(np.pi * u), 2.0 * u], axis=1), 200)
    sol = fv.solve_geodesic_bvp(sphere1, [np.pi / 2, 0], [np.pi / 2, 2.0], 2.0,
                                init=init, tol=1e-8)
    assert fc.p_energy(sphere1, sol, 2).value == pytest.approx(4.0, rel=1e-10)
    assert np.max(np.abs(sol.nodes[:, 0] - np.pi / 2)) < 1e-9


def test_bvp_p_half_lands_on_same_constant_speed_geodesic(sphere1):
    init = fc.from_function(
        lambda u: np.stack([np.pi / 2 + 0.1 * np.sin(np.pi * u), 2.0 * u], axis=1), 200)
    a = fv.solve_geodesic_bvp(sphere1, [np.pi / 2, 0], [np.pi / 2, 2.0], 2.0,
                              init=init, tol=1e-8)
    b = fv.solve_geodesic_bvp(sphere1, [np.pi / 2, 0], [np.pi / 2, 2.0], 0.5,
                              init=init, tol=1e-8)
    assert np.max(np.abs(a.nodes - b.nodes)) < 1e-9
    assert fc.speed_spread(sphere1, b) < 0.01


def test_bvp_rejects_p_zero_one(euclid2):
    for bad_p in (0.0, 1.0):
        with pytest.raises(BadRegime):
            fv.solve_geodesic_bvp(euclid2, [0, 0], [1, 1], bad_p)


def test_bvp_no_convergence_reports_best(euclid2):
    with pytest.raises(NoConvergence) as err:
        fv.solve_geodesic_bvp(euclid2, [0, 0], [1, 1], 2.0, tol=1e-16)
    assert err.value.best is not None
    assert "gradient_max_norm" in err.value.diagnostics


# -- first variation -----------------------------------------------------------------


def test_first_variation_vanishes_on_geodesics(sphere1, euclid2):
    rng = np.random.default_rng(21)
    arc = equator_arc(1.3, 200)
    for m, c in ((sphere1, arc), (euclid2, fc.line([0, 0], [2, 1], 200))):
        for p in (-1.0, 0.5, 2.0, 3.0):
            X = smooth_vanishing_field(c.params, rng, 2)
            assert abs(fv.first_variation(m, c, p, X)) < 1e-6


def test_first_variation_oracle_random_triples(euclid2, sphere1):
    rng = np.random.default_rng(5)
    cases = []
    for _ in range(10):
        amp = rng.uniform(0.05, 0.14)  # regularity needs amp < 1/(2 pi)
        cases.append((euclid2, warped_line([0, 0], [1.5, 1.0], amp, k=2, n=400)))
    for _ in range(10):
        amp = rng.uniform(0.02, 0.1)
        cases.append((sphere1, fc.from_function(
            lambda t, a=amp: np.stack([np.pi / 2 + a * np.sin(2 * np.pi * t),
                                       1.2 * t + a * np.sin(np.pi * t)], axis=1), 400)))
    for m, c in cases:
        p = float(rng.choice([-1.0, 0.5, 2.0, 3.0]))
        X = smooth_vanishing_field(c.params, rng, 2)
        val = fv.first_variation(m, c, p, X)
        eps = 1e-5
        plus = fc.p_energy(m, c.with_nodes(c.nodes + eps * X), p).value
        minus = fc.p_energy(m, c.with_nodes(c.nodes - eps * X), p).value
        oracle = (plus - minus) / (2 * eps * p)
        assert abs(val - oracle) <= 1e-4 * (1.0 + abs(val))


def test_first_variation_corner_jump_only(euclid2):
    t1 = np.linspace(0, 1, 101)
    seg1 = np.stack([t1, np.zeros_like(t1)], axis=1)
    seg2 = np.stack([np.ones_like(t1), 2 * t1], axis=1)
    c = fc.DiscretizedCurve(np.concatenate([seg1, seg2[1:]]), (100,))
    t = c.params
    X = np.stack([np.sin(np.pi * t), t * (1 - t)], axis=1)
    p = 2.0
    vl = np.array([2.0, 0.0])
    vr = np.array([0.0, 4.0])
    jump = np.linalg.norm(vr) ** (p - 2) * vr - np.linalg.norm(vl) ** (p - 2) * vl
    expected = -float(X[100] @ jump)
    assert fv.first_variation(euclid2, c, p, X) == pytest.approx(expected, abs=1e-10)


def test_first_variation_requires_vanishing_ends(euclid2):
    c = fc.line([0, 0], [1, 0], 100)
    X = np.ones((101, 2))
    with pytest.raises(ValueError):
        fv.first_variation(euclid2, c, 2.0, X)


# -- index form ------------------------------------------------------------------------


def test_index_form_flat_orthogonal_closed_form(euclid2):
    L = 2.0
    c = fc.line([0, 0], [L, 0], 200)
    t = c.params
    X = np.stack([np.zeros_like(t), np.sin(np.pi * t)], axis=1)
    val = fv.index_form(euclid2, c, 2.0, X, X)
    assert val == pytest.approx(np.pi ** 2, rel=1e-3)


def test_index_form_symmetry(sphere1):
    arc = equator_arc(0.9, 200)
    rng = np.random.default_rng(17)
    t = arc.params
    for _ in range(5):
        X = smooth_vanishing_field(t, rng, 2)
        Y = smooth_vanishing_field(t, rng, 2)
        for p in (2.0, 0.5):
            a = fv.index_form(sphere1, arc, p, X, Y)
            b = fv.index_form(sphere1, arc, p, Y, X)
            scale = max(abs(a), abs(b), 1.0)
            assert abs(a - b) <= 1e-8 * scale


def test_index_form_lemma1_orthogonal_pairs(sphere1):
    arc = equator_arc(1.2, 200)
    t = arc.params
    v = 1.2 * np.pi
    # tangential: f * c'; orthogonal: theta-direction bump
    f = np.sin(np.pi * t)
    tangential = f[:, None] * np.stack([np.zeros_like(t), np.full_like(t, v)], axis=1)
    orthogonal = np.stack([np.sin(2 * np.pi * t), np.zeros_like(t)], axis=1)
    for p in (2.0, 0.5, -1.0):
        val = fv.index_form(sphere1, arc, p, orthogonal, tangential)
        scale = abs(fv.index_form(sphere1, arc, p, tangential, tangential))
        assert abs(val) <= 1e-6 * max(scale, 1.0)


def test_index_form_two_parameter_hessian_oracle(sphere1, euclid2):
    rng = np.random.default_rng(23)
    cases = [
        (sphere1, equator_arc(0.9, 200)),
        (sphere1, equator_arc(1.5, 200)),
        (euclid2, fc.line([0, 0], [2, 0], 200)),
    ]
    checked = 0
    for m, c in cases:
        t = c.params
        for p in (2.0, 0.5, -1.0):
            X = smooth_vanishing_field(t, rng, 2)
            Y = 0.5 * X + 0.2 * smooth_vanishing_field(t, rng, 2)
            val = fv.index_form(m, c, p, X, Y)
            if abs(val) < 1e-3:
                continue
            eps = 1e-4
            def ep(a, b):
                nodes = c.nodes + a * eps * X + b * eps * Y
                return fc.p_energy(m, c.with_nodes(nodes), p).value
            orack = (ep(1, 1) - ep(1, -1) - ep(-1, 1) + ep(-1, -1)) / (4 * eps * eps)
            assert abs(val - orack) <= 1e-3 * abs(orack) + 1e-6
            checked += 1
    assert checked >= 5


def test_index_form_rejects_non_geodesic(sphere1):
    c = fc.from_function(
        lambda t: np.stack([np.full_like(t, np.pi / 3), 2 * np.pi * t], axis=1), 100)
    X = np.zeros((101, 2))
    with pytest.raises(NotAGeodesic):
        fv.index_form(sphere1, c, 2.0, X, X)


# -- index matrix and classification ---------------------------------------------------


def test_matrix_agrees_with_index_form_on_smooth_fields(sphere1):
    arc = equator_arc(1.1, 200)
    t = arc.params
    v, tables = fv.verify_geodesic(sphere1, arc)
    frame = fv.parallel_frame(sphere1, arc, v, tables)
    mat = fv.assemble_index_matrix(sphere1, arc, 2.0, tables=tables)
    rng = np.random.default_rng(29)
    for _ in range(3):
        # coefficients of smooth fields in the hat basis = interior samples
        u = np.concatenate([np.sin(np.pi * t[1:-1]) * rng.uniform(-1, 1),
                            np.sin(2 * np.pi * t[1:-1]) * rng.uniform(-1, 1)])
        w = np.concatenate([np.sin(2 * np.pi * t[1:-1]) * rng.uniform(-1, 1),
                            np.sin(np.pi * t[1:-1]) * rng.uniform(-1, 1)])
        # assemble coordinate fields from frame components
        def field(coeffs):
            full = np.zeros((t.size, 2))
            full[1:-1] += coeffs[:t.size - 2, None] * frame[1:-1, 0]
            full[1:-1] += coeffs[t.size - 2:, None] * frame[1:-1, 1]
            return full
        Xf = field(u)
        Yf = field(w)
        quad = float(u @ mat.matrix @ w)
        direct = fv.index_form(sphere1, arc, 2.0, Xf, Yf, tables=tables)
        assert abs(quad - direct) <= 2e-2 * max(abs(direct), 1.0)


def test_matrix_symmetry_and_blocks(sphere1):
    arc = equator_arc(0.9, 200)
    mat = fv.assemble_index_matrix(sphere1, arc, 2.0)
    asym = np.max(np.abs(mat.matrix - mat.matrix.T))
    assert asym <= 1e-8 * np.max(np.abs(mat.matrix))
    assert mat.tangential.size == 199
    assert mat.orthogonal.size == 199
    cross = np.max(np.abs(mat.cross_block()))
    assert cross <= 1e-6 * np.max(np.abs(np.diag(mat.matrix)))


def test_classification_table(sphere1):
    expectations = {
        (0.5, -1.0): "neither-min-nor-max",
        (0.5, 0.5): "neither-min-nor-max",
        (0.5, 2.0): "not-max",
        (1.5, -1.0): "not-max",
        (1.5, 0.5): "not-min",
        (1.5, 2.0): "neither-min-nor-max",
    }
    for (lfac, p), expected in expectations.items():
        arc = equator_arc(lfac, 200)
        conj = fj.find_conjugate_points(sphere1, arc)
        mat = fv.assemble_index_matrix(sphere1, arc, p)
        cls = fv.classify_critical_point(mat, conj)
        assert cls.verdict == expected, (lfac, p, cls)
        # signature sanity: tangential definite with the predicted sign
        pos, neg, zero = cls.tangential_signature
        if p < 0 or p > 1:
            assert neg == 0 and zero == 0
        else:
            assert pos == 0 and zero == 0


def test_classification_inconclusive_on_zero_band():
    mat = fv.IndexFormMatrix(
        p=2.0, v=1.0,
        matrix=np.diag([1.0, 1e-12, 2.0, 3.0]),
        tangential=np.arange(2), orthogonal=np.arange(2, 4),
        n_interior=2, dim=2)
    conj = fj.ConjugateReport([], [], 0, 1e-8)
    cls = fv.classify_critical_point(mat, conj)
    assert cls.verdict == "inconclusive"


def test_orthogonal_definiteness_iff_no_conjugate_points(sphere1):
    # min eigenvalue of the p=2 orthogonal block is positive exactly when
    # no conjugate parameter lies inside (0, 1)
    for lfac in (0.5, 0.9, 1.1, 1.5, 2.5):
        arc = equator_arc(lfac, 200)
        rep = fj.find_conjugate_points(sphere1, arc)
        eig = np.linalg.eigvalsh(
            fv.assemble_index_matrix(sphere1, arc, 2.0).block("orthogonal"))
        assert (eig[0] > 0) == (rep.m == 0), (lfac, eig[0], rep.m)


def test_proposition1_tangential_signs(sphere1):
    arc = equator_arc(0.9, 200)
    for p, should_be_positive in ((-1.0, True), (0.5, False), (2.0, True)):
        mat = fv.assemble_index_matrix(sphere1, arc, p)
        eig = np.linalg.eigvalsh(mat.block("tangential"))
        if should_be_positive:
            assert eig[0] > 0
        else:
            assert eig[-1] < 0
