import numpy as np
import pytest

from finsler_penergy import connection as fk
from finsler_penergy import curve as fc
from finsler_penergy import numdiff

from conftest import tilted_circle


def sphere_christoffels(th: float) -> np.ndarray:
    gam = np.zeros((2, 2, 2))
    gam[0, 1, 1] = -np.sin(th) * np.cos(th)
    gam[1, 0, 1] = gam[1, 1, 0] = 1.0 / np.tan(th)
    return gam


def test_euclidean_coefficients_vanish(euclid3):
    cs = fk.connection_sample(euclid3, np.zeros(3), np.array([1.0, 2.0, 0.5]))
    for arr in (cs.gamma_formal, cs.nonlinear, cs.cartan_l, cs.cartan_c):
        assert np.max(np.abs(arr)) < 1e-12


def test_sphere_christoffels_closed_form(sphere1):
    x = np.array([np.pi / 4, 0.3])
    y = np.array([0.4, -1.1])
    cs = fk.connection_sample(sphere1, x, y)
    exact = sphere_christoffels(np.pi / 4)
    assert exact[0, 1, 1] == pytest.approx(-0.5)
    assert exact[1, 0, 1] == pytest.approx(1.0)
    assert np.max(np.abs(cs.gamma_formal - exact)) < 1e-9
    # Riemannian: N^i_j = Gamma^i_jk y^k
    assert np.max(np.abs(cs.nonlinear - np.einsum("ijk,k->ij", exact, y))) < 1e-9


def test_riemannian_degeneration(sphere1):
    rng = np.random.default_rng(2)
    for _ in range(5):
        x = np.array([rng.uniform(0.4, np.pi - 0.4), rng.uniform(-2, 2)])
        y = rng.uniform(-1.5, 1.5, 2)
        if np.linalg.norm(y) < 0.2:
            y += 0.5
        cs = fk.connection_sample(sphere1, x, y)
        assert np.max(np.abs(cs.cartan_c)) <= 1e-7
        assert np.max(np.abs(cs.cartan_l - cs.gamma_formal)) <= 1e-6


def test_randers_christoffel_against_g_oracle(randers_half):
    # independent oracle: x-derivatives of the analytic tensor vanish
    # (constant data), so the formal symbols must vanish too
    rng = np.random.default_rng(4)
    for _ in range(3):
        x = rng.uniform(-1, 1, 2)
        y = rng.uniform(-1.5, 1.5, 2)
        if np.linalg.norm(y) < 0.2:
            y += 0.7
        cs = fk.connection_sample(randers_half, x, y)
        assert np.max(np.abs(cs.gamma_formal)) < 1e-9
        assert np.max(np.abs(cs.nonlinear)) < 1e-9
        assert np.max(np.abs(cs.cartan_c)) > 1e-3  # genuinely non-Riemannian


def test_cartan_tensor_via_y_derivative_oracle(randers_half):
    # C^i_jk = 0.5 g^im dg_mk/dy^j-combination; oracle differentiates the
    # analytic tensor directly
    x = np.zeros(2)
    y = np.array([1.0, 0.7])
    cs = fk.connection_sample(randers_half, x, y)
    dg = numdiff.array_derivative(
        lambda v: randers_half.raw_tensor(x, v), y, h=1e-4)
    g_inv = np.linalg.inv(randers_half.raw_tensor(x, y))
    comb = (np.einsum("jmk->mjk", dg) + np.einsum("kjm->mjk", dg)
            - np.einsum("mjk->mjk", dg))
    oracle = 0.5 * np.einsum("im,mjk->ijk", g_inv, comb)
    assert np.max(np.abs(cs.cartan_c - oracle)) < 1e-6


def test_lower_index_symmetry_and_contraction(sphere1, randers_half):
    rng = np.random.default_rng(9)
    for m in (sphere1, randers_half):
        lo, hi = m.sample_box
        X = rng.uniform(lo, hi, size=(100, m.dim))
        Y = rng.uniform(-2, 2, size=(100, m.dim))
        Y[np.linalg.norm(Y, axis=1) < 0.2] += 0.8
        batch = fk.connection_samples_batch(m, X, Y)
        for key in ("gamma_formal", "cartan_l", "cartan_c"):
            arr = batch[key]
            assert np.max(np.abs(arr - np.swapaxes(arr, 2, 3))) <= 1e-8
        contr = np.einsum("bijk,bj->bik", batch["cartan_c"], Y)
        norms = np.linalg.norm(Y, axis=1)
        assert np.max(np.abs(contr) / norms[:, None, None]) <= 1e-6


def test_combined_coefficient_contraction(sphere1):
    rng = np.random.default_rng(13)
    X = np.stack([rng.uniform(0.4, np.pi - 0.4, 20), rng.uniform(-2, 2, 20)], axis=1)
    Y = rng.uniform(-1.5, 1.5, (20, 2))
    Y[np.linalg.norm(Y, axis=1) < 0.2] += 0.6
    batch = fk.connection_samples_batch(sphere1, X, Y)
    comb = np.einsum("bimk,bm,bk->bi", batch["gamma_combined"], Y, Y)
    formal = np.einsum("bimk,bm,bk->bi", batch["gamma_formal"], Y, Y)
    scale = np.einsum("bi,bi->b", Y, Y)
    assert np.max(np.abs(comb - formal) / scale[:, None]) <= 1e-6


def test_covariant_derivative_flat_cases(euclid2):
    c = fc.line([0, 0], [1, 0], 100)
    t = c.params
    const = np.tile([0.3, -0.8], (t.size, 1))
    D = fk.covariant_derivative(euclid2, c, const)
    assert D.max_norm < 1e-10
    X = np.stack([t * (1 - t), np.zeros_like(t)], axis=1)
    D2 = fk.covariant_derivative(euclid2, c, X)
    assert np.max(np.abs(D2.values[:, 0] - (1 - 2 * t))) < 1e-9


def test_parallel_normal_on_equator(sphere1):
    arc = fc.from_function(
        lambda t: np.stack([np.full_like(t, np.pi / 2), 2 * np.pi * t], axis=1), 200)
    Xn = np.stack([np.ones(201), np.zeros(201)], axis=1)
    D = fk.covariant_derivative(sphere1, arc, Xn)
    assert D.max_norm < 1e-8


def test_lcn_form_agrees_with_combined(sphere1, randers_half):
    cur = tilted_circle(100)
    t = cur.params
    X = np.stack([np.sin(2 * t), np.cos(t)], axis=1)
    for m in (sphere1, randers_half):
        c = cur if m is sphere1 else fc.from_function(
            lambda s: np.stack([s + 0.1 * np.sin(2 * np.pi * s),
                                0.3 * np.sin(np.pi * s)], axis=1), 100)
        a = fk.covariant_derivative(m, c, X)
        b = fk.covariant_derivative_lcn(m, c, X)
        assert np.max(np.abs(a.values - b.values)) < 1e-9


def _compat_fields(t):
    X = np.stack([np.sin(2.1 * t) + 0.3, np.cos(1.3 * t)], axis=1)
    Y = np.stack([np.cos(2.7 * t), 0.5 + np.sin(1.7 * t)], axis=1)
    return X, Y


def test_compatibility_exact_in_flat_space(euclid2):
    # affine fields: the discrete product rule is exact, so the flat
    # residual drops to rounding; generic fields keep the O(h^2) stencil
    # defect, checked by the convergence test below
    c = fc.from_function(
        lambda t: np.stack([t + 0.1 * np.sin(2 * np.pi * t),
                            0.2 * np.sin(np.pi * t)], axis=1), 100)
    t = c.params
    X = np.stack([0.5 + 0.3 * t, 1.0 - t], axis=1)
    Y = np.stack([2.0 * t - 0.2, 0.4 + t], axis=1)
    assert fk.metric_compatibility_residual(euclid2, c, X, Y) <= 1e-10


def test_compatibility_flat_second_order(euclid2):
    res = {}
    for n in (100, 200):
        c = fc.from_function(
            lambda t: np.stack([t + 0.1 * np.sin(2 * np.pi * t),
                                0.2 * np.sin(np.pi * t)], axis=1), n)
        X, Y = _compat_fields(c.params)
        res[n] = fk.metric_compatibility_residual(euclid2, c, X, Y)
    assert 3.0 <= res[100] / res[200] <= 5.0


@pytest.mark.parametrize("metric_name", ["sphere", "randers"])
def test_compatibility_second_order(metric_name, sphere1, randers_half):
    m = sphere1 if metric_name == "sphere" else randers_half
    res = {}
    for n in (100, 200):
        if metric_name == "sphere":
            c = tilted_circle(n)
        else:
            c = fc.from_function(
                lambda s: np.stack([s + 0.1 * np.sin(2 * np.pi * s),
                                    0.3 * np.sin(np.pi * s)], axis=1), n)
        X, Y = _compat_fields(c.params)
        res[n] = fk.metric_compatibility_residual(m, c, X, Y)
    ratio = res[100] / res[200]
    assert 3.0 <= ratio <= 5.0


def test_randers_compatibility_frozen_bound(randers_half):
    # bound frozen from the grid-refinement study at 200 nodes
    c = fc.from_function(
        lambda s: np.stack([s + 0.1 * np.sin(2 * np.pi * s),
                            0.3 * np.sin(np.pi * s)], axis=1), 200)
    X, Y = _compat_fields(c.params)
    assert fk.metric_compatibility_residual(randers_half, c, X, Y) <= 3e-2
