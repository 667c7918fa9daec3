import math
import warnings

import numpy as np
import pytest

from csl import catalog
from csl import quadrature as quad
from csl import variation as var
from csl.ambient import factor_from_expr
from csl.surface import surface_at

ZERO = catalog.zero_factor()
LOG02 = factor_from_expr("2*ln(1+0.2*x)")


def torus_nodes(rng, n):
    return rng.uniform(0, 2 * math.pi, (n, 2))


def sphere_nodes(rng, n):
    return np.stack([rng.uniform(0, 2 * math.pi, n), rng.uniform(0.3, math.pi - 0.3, n)], -1)


def test_unit_speed_shrinks_sphere(rng):
    r, t = 1.5, 0.2
    uv = sphere_nodes(rng, 10)
    varied = var.vary_surface(catalog.sphere(r), ZERO, "1", t)
    pos = varied.position(uv[:, 0], uv[:, 1])
    np.testing.assert_allclose(np.linalg.norm(pos, axis=-1), r - t, rtol=1e-14)
    geom = surface_at(varied, ZERO, uv, 2)
    np.testing.assert_allclose(geom.principal_curvatures, 1 / (r - t), rtol=1e-12)


def test_zero_time_is_identity(rng):
    s, f = catalog.perturbed_torus(), catalog.make_factor("linear_harmonic")
    uv = torus_nodes(rng, 10)
    a = surface_at(s, f, uv, 3)
    b = surface_at(var.vary_surface(s, f, "sin(u)", 0.0), f, uv, 3)
    for name in ("position", "normal", "shape_operator", "gauss_intrinsic"):
        np.testing.assert_allclose(getattr(b, name), getattr(a, name), atol=1e-14)


def test_area_derivative_of_sphere():
    r = 1.2
    s = catalog.sphere(r)
    grid = quad.make_grid(s, 32)
    fd = var.fd_delta("area", s, ZERO, "1", grid=grid)
    assert fd.value == pytest.approx(-8 * math.pi * r, rel=1e-9)
    rep = var.area_variation_check(s, ZERO, "1", grid)
    assert rep.analytic == pytest.approx(-8 * math.pi * r, rel=1e-12)
    assert rep.verdict == "pass"


def test_sphere_weingarten_and_metric_variation(rng):
    r = 2.0
    s = catalog.sphere(r)
    uv = sphere_nodes(rng, 5)
    dA = var.delta_weingarten_analytic(s, ZERO, "1", uv)
    np.testing.assert_allclose(dA, np.broadcast_to(np.eye(2) / r ** 2, dA.shape), atol=1e-12)
    np.testing.assert_allclose(var.delta_weingarten_analytic(s, ZERO, "0", uv), 0, atol=1e-15)
    # unit tangent along the latitude circle
    geom = surface_at(s, ZERO, uv, 2)
    X = np.stack([1 / np.sqrt(geom.induced_metric[:, 0, 0]), np.zeros(5)], -1)
    Y = np.stack([np.zeros(5), 1 / np.sqrt(geom.induced_metric[:, 1, 1])], -1)
    np.testing.assert_allclose(var.delta_metric_analytic(s, ZERO, "1", uv, X, X), -2 / r, rtol=1e-12)
    np.testing.assert_allclose(var.delta_metric_analytic(s, ZERO, "1", uv, X, Y), 0, atol=1e-14)
    np.testing.assert_allclose(var.delta_area_element_analytic(s, ZERO, "0", uv), 0, atol=1e-15)


def test_umbilic_eigenvalue_variation_on_sphere(rng):
    r = 1.5
    s = catalog.sphere(r)
    uv = sphere_nodes(rng, 5)
    for i in (1, 2):
        d = var.delta_eigenvalue_analytic(s, ZERO, "1", uv, i)
        np.testing.assert_allclose(d, 1 / r ** 2, rtol=1e-10)
        fd = var.fd_delta(f"lambda{i}", s, ZERO, "1", uv=uv)
        np.testing.assert_allclose(fd.value, 1 / r ** 2, rtol=1e-8)


def test_umbilic_eigenvalue_with_split_branches_is_nan(rng):
    s = catalog.sphere()
    uv = sphere_nodes(rng, 4)
    with pytest.warns(RuntimeWarning):
        d = var.delta_eigenvalue_analytic(s, ZERO, "x*y", uv, 1)
    assert np.all(np.isnan(d))
    rep = var.eigenvalue_check(s, ZERO, "x*y", uv, 1)
    assert rep.verdict == "report-only"
    assert "umbilic" in rep.extra["note"]


@pytest.mark.parametrize("factor", [ZERO, LOG02], ids=["flat", "log"])
@pytest.mark.parametrize("i", [1, 2])
def test_eigenvalue_variation_on_torus(rng, factor, i):
    s = catalog.torus()
    uv = torus_nodes(rng, 50)
    rep = var.eigenvalue_check(s, factor, "sin(u)*cos(v)", uv, i)
    assert rep.discrepancy < 1e-6
    assert rep.verdict == "pass"


def test_literal_curvature_sign_disagrees_with_finite_differences(rng):
    s = catalog.torus()
    uv = torus_nodes(rng, 20)
    rep = var.eigenvalue_check(s, LOG02, "sin(u)*cos(v)", uv, 1)
    assert rep.extra["literal_curvature_term_discrepancy"] > 1e-3


@pytest.mark.parametrize("factor", ["zero", "linear_harmonic", "azimuthal"])
def test_pointwise_first_variations(rng, factor):
    s, f = catalog.perturbed_torus(), catalog.make_factor(factor)
    uv = torus_nodes(rng, 20)
    v = var.random_variation(rng)
    for check in (var.area_element_check, var.metric_check):
        rep = check(s, f, v, uv)
        assert rep.verdict == "pass", (check.__name__, rep.discrepancy)
    dA = var.delta_weingarten_analytic(s, f, v, uv)
    fd = var.delta_weingarten_fd_principal(s, f, v, uv)
    assert np.max(var.relative_discrepancy(dA, fd.value)) < 1e-6


def test_gauss_curvature_variation_flat(rng):
    s = catalog.torus()
    uv = torus_nodes(rng, 20)
    for seed in range(3):
        f = var.random_variation(np.random.default_rng(seed))
        rep = var.gauss_curvature_check(s, ZERO, f, uv)
        assert rep.verdict == "pass"
        assert rep.extra["classical_formula_discrepancy"] < 1e-6


def test_gauss_curvature_variation_terms_vanish_for_zero_speed(rng):
    uv = torus_nodes(rng, 5)
    terms = var.delta_gauss_curvature_terms(catalog.torus(), catalog.make_factor("azimuthal"), "0", uv)
    for arr in (terms.theorem_rhs, terms.div_delta_omega_sharp, terms.hessian_part):
        np.testing.assert_allclose(arr, 0, atol=1e-15)


def test_gauss_curvature_variation_with_factor_is_report_only(rng):
    rep = var.gauss_curvature_check(catalog.torus(), catalog.make_factor("azimuthal"), "sin(u)",
                                    torus_nodes(rng, 5))
    assert rep.verdict == "report-only"
    assert np.isfinite(rep.discrepancy)
    assert np.isfinite(rep.extra["alt_coefficient_discrepancy"])


def test_linearity(rng):
    s, f = catalog.torus(), catalog.make_factor("linear_harmonic")
    uv = torus_nodes(rng, 10)
    a, b = var.random_variation(rng), var.random_variation(rng)
    c = 1.7
    for fn in (lambda v: var.delta_weingarten_analytic(s, f, v, uv),
               lambda v: var.delta_area_element_analytic(s, f, v, uv),
               lambda v: var.delta_gauss_curvature_analytic(s, f, v, uv)):
        np.testing.assert_allclose(fn(a + b), fn(a) + fn(b), atol=1e-8)
        np.testing.assert_allclose(fn(a.scaled(c)), c * fn(a), atol=1e-8)
    fa = var.fd_delta("H", s, f, a, uv=uv).value
    fb = var.fd_delta("H", s, f, b, uv=uv).value
    fab = var.fd_delta("H", s, f, a + b, uv=uv).value
    np.testing.assert_allclose(fab, fa + fb, atol=1e-8)


def test_gauss_bonnet_is_invariant_under_variation(rng):
    s = catalog.torus()
    rep = var.gauss_bonnet_variation(s, LOG02, var.random_variation(rng), quad.make_grid(s, 64))
    assert abs(rep.fd) < 1e-6
    assert rep.verdict == "pass"


def test_mean_curvature_residual_on_unit_sphere(rng):
    res = var.mean_el_residual(catalog.sphere(), ZERO, sphere_nodes(rng, 5))
    np.testing.assert_allclose(res, -2, atol=1e-10)


def test_willmore_residual_vanishes_on_minimisers(rng):
    np.testing.assert_allclose(var.willmore_el_residual(catalog.sphere(), ZERO, sphere_nodes(rng, 10)),
                               0, atol=1e-9)
    s = catalog.clifford_torus()
    grid = quad.make_grid(s, 32)
    w = var.willmore_el_residual(s, ZERO, grid.nodes.reshape(-1, 2))
    assert np.max(np.abs(w)) < 1e-6


@pytest.mark.parametrize("seed", range(5))
def test_willmore_functional_first_variation(seed):
    s = catalog.torus()
    v = var.random_variation(np.random.default_rng(seed))
    rep = var.willmore_functional_check(s, ZERO, v, quad.make_grid(s, 64))
    assert rep.discrepancy < 1e-6
    assert rep.verdict == "pass"


def test_mean_functional_first_variation_flat():
    s = catalog.torus()
    rep = var.mean_functional_check(s, ZERO, "0.1+0.2*z", quad.make_grid(s, 64))
    assert rep.verdict == "pass"


def test_random_variation_is_reproducible():
    a = var.random_ambient_expr(np.random.default_rng(5))
    b = var.random_ambient_expr(np.random.default_rng(5))
    assert a == b and "+-" not in a
