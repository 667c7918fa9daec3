import math

import numpy as np
import pytest

from csl import catalog
from csl import quadrature as quad
from csl.ambient import factor_from_expr
from csl.surface import (codazzi_residual, divergence_of_ambient, field_jet, shape_operator,
                         surface_at, surface_divergence, surface_laplacian)


def random_uv(rng, n, topology="torus_like"):
    u = rng.uniform(0, 2 * math.pi, n)
    v = rng.uniform(0.2, math.pi - 0.2, n) if topology == "sphere_like" else rng.uniform(0, 2 * math.pi, n)
    return np.stack([u, v], -1)


def test_round_sphere(rng):
    r = 1.7
    uv = random_uv(rng, 20, "sphere_like")
    geom = surface_at(catalog.sphere(r), catalog.zero_factor(), uv, 3)
    np.testing.assert_allclose(geom.principal_curvatures, 1 / r, rtol=1e-12)
    np.testing.assert_allclose(geom.mean_curvature, 1 / r, rtol=1e-12)
    np.testing.assert_allclose(geom.gauss_intrinsic, 1 / r ** 2, rtol=1e-10)
    np.testing.assert_allclose(geom.ambient_sectional, 0, atol=1e-15)
    assert np.all(geom.umbilic)
    A = shape_operator(catalog.sphere(r), catalog.zero_factor(), uv)
    np.testing.assert_allclose(A, np.broadcast_to(np.eye(2) / r, A.shape), atol=1e-12)


def test_inward_normal_points_to_the_centre(rng):
    s = catalog.sphere(1.0, center=(0.5, -1.0, 2.0))
    uv = random_uv(rng, 10, "sphere_like")
    geom = surface_at(s, catalog.zero_factor(), uv, 2)
    radial = geom.position - np.array([0.5, -1.0, 2.0])
    assert np.all(np.sum(geom.normal * radial, -1) < 0)


def test_torus_principal_curvatures(rng):
    R, r = 2.0, 0.5
    uv = random_uv(rng, 30)
    geom = surface_at(catalog.torus(R, r), catalog.zero_factor(), uv, 3)
    v = uv[:, 1]
    np.testing.assert_allclose(geom.lambda1, 1 / r, rtol=1e-12)
    np.testing.assert_allclose(geom.lambda2, np.cos(v) / (R + r * np.cos(v)), atol=1e-12)
    np.testing.assert_allclose(geom.gauss_intrinsic, geom.lambda1 * geom.lambda2, atol=1e-10)


def test_gauss_equation_on_ellipsoid(rng):
    s = catalog.ellipsoid(1.0, 1.0, 1.3)
    f = factor_from_expr("2*ln(1+0.1*x)")
    geom = surface_at(s, f, random_uv(rng, 100, "sphere_like"), 3)
    assert np.max(np.abs(geom.gauss_residual)) < 1e-8


@pytest.mark.parametrize("factor", ["zero", "linear_harmonic", "point_source", "azimuthal"])
def test_gauss_equation_on_torus(rng, factor):
    geom = surface_at(catalog.torus(), catalog.make_factor(factor), random_uv(rng, 100), 3)
    assert np.max(np.abs(geom.gauss_residual)) < 1e-8


def test_shape_operator_is_self_adjoint(rng):
    f = catalog.make_factor("linear_harmonic")
    for s in (catalog.ellipsoid(), catalog.perturbed_torus()):
        geom = surface_at(s, f, random_uv(rng, 40, s.topology), 2)
        gA = geom.induced_metric @ geom.shape_operator
        np.testing.assert_allclose(gA, np.swapaxes(gA, -1, -2), atol=1e-12)
        # principal directions are g~-orthonormal
        e = geom.principal_directions
        gram = np.array([[geom.g(e[:, i], e[:, j]) for j in range(2)] for i in range(2)])
        np.testing.assert_allclose(gram, np.broadcast_to(np.eye(2)[..., None], gram.shape), atol=1e-12)


def test_orientation_flip(rng):
    f = catalog.make_factor("linear_harmonic")
    s = catalog.ellipsoid(1.0, 0.8, 1.3)
    uv = random_uv(rng, 30, "sphere_like")
    a = surface_at(s, f, uv, 3)
    b = surface_at(s.with_orientation("outward"), f, uv, 3)
    np.testing.assert_allclose(b.normal, -a.normal, atol=1e-15)
    np.testing.assert_allclose(b.shape_operator, -a.shape_operator, atol=1e-12)
    np.testing.assert_allclose(b.lambda1, -a.lambda2, atol=1e-12)
    np.testing.assert_allclose(b.lambda2, -a.lambda1, atol=1e-12)
    np.testing.assert_allclose(b.mean_curvature, -a.mean_curvature, atol=1e-12)
    np.testing.assert_allclose(b.gauss_intrinsic, a.gauss_intrinsic, atol=1e-12)
    np.testing.assert_allclose(b.ambient_sectional, a.ambient_sectional, atol=1e-12)


def _random_chart_vectors(rng, n):
    return [rng.normal(size=(n, 2)) for _ in range(3)]


def test_flat_codazzi(rng):
    for s in (catalog.torus(), catalog.ellipsoid(), catalog.perturbed_torus()):
        uv = random_uv(rng, 30, s.topology)
        X, Y, Z = _random_chart_vectors(rng, 30)
        res = codazzi_residual(s, catalog.zero_factor(), uv, X, Y, Z)
        assert np.max(res) < 1e-9


def test_codazzi_with_azimuthal_factor(rng):
    s, f = catalog.torus(), catalog.make_factor("azimuthal")
    uv = random_uv(rng, 50)
    X, Y, Z = _random_chart_vectors(rng, 50)
    assert np.max(codazzi_residual(s, f, uv, X, Y, Z, form="tangent")) < 1e-8
    assert np.max(codazzi_residual(s, f, uv, X, Y, Z, form="general")) < 1e-8


def test_general_codazzi_holds_without_tangency(rng):
    s, f = catalog.torus(), catalog.make_factor("linear_harmonic")
    uv = random_uv(rng, 50)
    X, Y, Z = _random_chart_vectors(rng, 50)
    assert np.max(codazzi_residual(s, f, uv, X, Y, Z, form="general")) < 1e-8
    # the tangent form presumes omega# tangent, which fails here
    assert np.max(codazzi_residual(s, f, uv, X, Y, Z, form="tangent")) > 1e-4


def test_laplacian_examples(rng):
    uv = random_uv(rng, 20, "sphere_like")
    s, z = catalog.sphere(), catalog.zero_factor()
    np.testing.assert_allclose(surface_laplacian(s, z, uv, "3.5"), 0, atol=1e-14)
    np.testing.assert_allclose(surface_laplacian(s, z, uv, "H"), 0, atol=1e-10)
    lap = surface_laplacian(s, z, uv, "cos(v)")
    np.testing.assert_allclose(lap, -2 * np.cos(uv[:, 1]), atol=1e-8)
    # same eigenfunction written in ambient coordinates
    np.testing.assert_allclose(surface_laplacian(s, z, uv, "z"), -2 * np.cos(uv[:, 1]), atol=1e-8)


def test_laplacian_scales_with_conformal_factor(rng):
    # a constant factor e^c rescales the induced metric, so Delta picks up e^-c
    uv = random_uv(rng, 10, "sphere_like")
    s = catalog.sphere()
    lap = surface_laplacian(s, factor_from_expr("0.4"), uv, "cos(v)")
    np.testing.assert_allclose(lap, -2 * math.exp(-0.4) * np.cos(uv[:, 1]), atol=1e-8)


def test_zero_field_divergence(rng):
    uv = random_uv(rng, 10)
    div = surface_divergence(catalog.torus(), catalog.zero_factor(), uv, ("0", "0", "0"))
    np.testing.assert_allclose(div, 0, atol=1e-15)


@pytest.mark.parametrize("factor", ["zero", "linear_harmonic"])
def test_divergence_theorem(factor):
    s, f = catalog.torus(), catalog.make_factor(factor)
    vec = ("sin(y)+0.3*z", "x*z", "cos(x)")

    def fn(geom):
        comps = [field_jet(geom, c, geom.order - 1) for c in vec]
        return divergence_of_ambient(geom, comps, "tangential")
    rep = quad.integrate(s, f, fn, quad.make_grid(s, 96), order=3)
    assert abs(rep.value) < 1e-9


def test_frame_trace_divergence_differs_by_normal_part(rng):
    s, f = catalog.ellipsoid(), catalog.make_factor("linear_harmonic")
    uv = random_uv(rng, 10, "sphere_like")
    vec = ("x", "y", "z")
    t = surface_divergence(s, f, uv, vec, "tangential")
    fr = surface_divergence(s, f, uv, vec, "frame_trace")
    geom = surface_at(s, f, uv, 3)
    normal_part = geom.g(geom.position, geom.normal)
    np.testing.assert_allclose(fr - t, -2 * geom.mean_curvature * normal_part, atol=1e-12)
