"""Surface quadrature and the global integral identities.

Torus-like charts use the periodic trapezoid rule on both axes; sphere-like
charts use the trapezoid rule in longitude and Gauss-Legendre nodes in
latitude, so the poles are never evaluated.  Node evaluations run in fixed
chunks and are reduced with numpy's pairwise sum in node order, so results
do not depend on the thread count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import jets
from .ambient import ConformalFactor
from .surface import (ClosedSurface, SurfacePointGeometry, covariant_derivative,
                      divergence_jet, divergence_of_ambient, field_jet, omega_sharp_jets,
                      principal_hessian, surface_at, surface_gradient_jets, tangent_field_jets)

CHUNK = 2048


def default_threads() -> int:
    return max(1, int(os.environ.get("CSL_THREADS", "1")))


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    surface: ClosedSurface
    nodes: np.ndarray       # (n_u, n_v, 2)
    weights: np.ndarray     # (n_u, n_v), chart measure du dv
    resolution: tuple
    rule: str


def make_grid(surface: ClosedSurface, n_u: int, n_v: int | None = None) -> QuadratureGrid:
    n_v = n_u if n_v is None else n_v
    (u0, u1), (v0, v1) = surface.domain
    u = u0 + (u1 - u0) * np.arange(n_u) / n_u
    wu = np.full(n_u, (u1 - u0) / n_u)
    if surface.topology == "torus_like":
        v = v0 + (v1 - v0) * np.arange(n_v) / n_v
        wv = np.full(n_v, (v1 - v0) / n_v)
        rule = "trapezoid_periodic"
    else:
        x, w = np.polynomial.legendre.leggauss(n_v)
        v = v0 + (v1 - v0) * (x + 1) / 2
        wv = w * (v1 - v0) / 2
        rule = "gauss_legendre_latitude"
    uu, vv = np.meshgrid(u, v, indexing="ij")
    return QuadratureGrid(surface, np.stack([uu, vv], -1), np.outer(wu, wv), (n_u, n_v), rule)


def evaluate_on_grid(surface: ClosedSurface, factor: ConformalFactor, nodes: np.ndarray,
                     fn: Callable[[SurfacePointGeometry], object], order: int,
                     threads: int | None = None, chunk: int = CHUNK):
    """Apply ``fn`` to the geometry at every node; returns arrays shaped like nodes.

    ``fn`` may return one array or a tuple of arrays (each batch-shaped).
    """
    shape = nodes.shape[:-1]
    flat = nodes.reshape(-1, 2)
    pieces = [flat[i:i + chunk] for i in range(0, len(flat), chunk)]

    def work(p):
        try:
            return fn(surface_at(surface, factor, p, order))
        except (ValueError, FloatingPointError) as exc:
            raise type(exc)(f"{exc} (evaluating chunk starting at chart point {p[0]})") from exc

    threads = default_threads() if threads is None else threads
    if threads > 1 and len(pieces) > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(work, pieces))
    else:
        results = [work(p) for p in pieces]
    if isinstance(results[0], tuple):
        return tuple(np.concatenate([np.asarray(r[k]).reshape(len(p), *np.shape(r[k])[1:])
                                     for r, p in zip(results, pieces)]).reshape(shape + np.shape(results[0][k])[1:])
                     for k in range(len(results[0])))
    return np.concatenate([np.broadcast_to(r, (len(p),) + np.shape(r)[1:])
                           for r, p in zip(results, pieces)]).reshape(shape + np.shape(results[0])[1:])


def omega_of(geom: SurfacePointGeometry, v) -> np.ndarray:
    return np.sum(geom.ambient.omega * v, axis=-1)


def willmore_el(geom: SurfacePointGeometry) -> np.ndarray:
    """W = Delta H + H (|w#|^2 - l1 l2 + 2 H^2 - K), with K = K~ + l1 l2."""
    from .surface import laplacian_jet
    H = geom.mean_curvature
    lap = laplacian_jet(geom, geom.H_jet).value
    return lap + H * (geom.omega_sharp_norm_sq - geom.extrinsic_product + 2 * H * H
                      - geom.gauss_extrinsic)


def mean_el(geom: SurfacePointGeometry) -> np.ndarray:
    """|w#|^2 - l1 l2 - K."""
    return geom.omega_sharp_norm_sq - geom.extrinsic_product - geom.gauss_extrinsic


INTEGRANDS: dict[str, tuple[int, Callable]] = {
    "one": (2, lambda g: np.ones_like(g.mean_curvature)),
    "H": (2, lambda g: g.mean_curvature),
    "H2": (2, lambda g: g.mean_curvature ** 2),
    "K": (3, lambda g: g.gauss_intrinsic),
    "K_ext": (2, lambda g: g.gauss_extrinsic),
    "omega_sharp_sq": (2, lambda g: g.omega_sharp_norm_sq),
    "H_omega_sharp_sq": (2, lambda g: g.mean_curvature * g.omega_sharp_norm_sq),
    "mean_el": (2, mean_el),
    "willmore_el": (4, willmore_el),
}


def resolve_integrand(integrand, order: int | None = None):
    if isinstance(integrand, str):
        if integrand not in INTEGRANDS:
            raise KeyError(f"unknown integrand {integrand!r}; known: {sorted(INTEGRANDS)}")
        o, fn = INTEGRANDS[integrand]
        return integrand, fn, max(o, order or 0)
    return getattr(integrand, "__name__", "custom"), integrand, order or 3


@dataclass
class IntegralReport:
    name: str
    value: float
    error: float
    resolution: tuple
    coarse_resolution: tuple
    coarse_value: float
    integrand_min: float
    integrand_max: float
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "error": self.error,
                "resolution": list(self.resolution),
                "coarse_resolution": list(self.coarse_resolution),
                "coarse_value": self.coarse_value,
                "integrand_min": self.integrand_min, "integrand_max": self.integrand_max,
                **self.extra}


def quadrature_sum(grid: QuadratureGrid, values: np.ndarray, density: np.ndarray) -> float:
    return float(np.sum((grid.weights * values * density).reshape(-1)))


def _integrate_once(surface, factor, fn, grid, order, threads):
    vals, dens = evaluate_on_grid(surface, factor, grid.nodes,
                                  lambda g: (fn(g), g.area_density), order, threads)
    return quadrature_sum(grid, vals, dens), vals


def integrate(surface: ClosedSurface, factor: ConformalFactor, integrand, grid: QuadratureGrid,
              order: int | None = None, threads: int | None = None,
              estimate_error: bool = True) -> IntegralReport:
    """sum_i w_i * integrand(uv_i) * area_density(uv_i), with a half-resolution
    comparison as error estimate."""
    name, fn, order = resolve_integrand(integrand, order)
    value, vals = _integrate_once(surface, factor, fn, grid, order, threads)
    coarse_res, coarse = grid.resolution, value
    if estimate_error:
        n_u, n_v = grid.resolution
        cgrid = make_grid(surface, max(n_u // 2, 2), max(n_v // 2, 2))
        coarse, _ = _integrate_once(surface, factor, fn, cgrid, order, threads)
        coarse_res = cgrid.resolution
    return IntegralReport(name, value, abs(value - coarse), grid.resolution, coarse_res, coarse,
                          float(np.min(vals)), float(np.max(vals)))


class GaussBonnet(NamedTuple):
    integral: float
    chi: float
    report: IntegralReport


def gauss_bonnet_check(surface, factor, grid, integrand: str = "K_ext", threads=None,
                       tol: float | None = None) -> GaussBonnet:
    """Integral of Gauss curvature and the Euler characteristic it implies."""
    rep = integrate(surface, factor, integrand, grid, threads=threads)
    if tol is not None and rep.error > tol:
        raise ArithmeticError(f"Gauss-Bonnet quadrature not converged: error {rep.error:.3e} > {tol:.1e}")
    return GaussBonnet(rep.value, rep.value / (2 * math.pi), rep)


def expected_chi(surface: ClosedSurface) -> int:
    return 2 if surface.topology == "sphere_like" else 0


# -- integral identities ------------------------------------------------

@dataclass
class IdentityReport:
    name: str
    residual: float
    tangent_integral: float
    general_integral: float
    divergence_integral: float
    pointwise_max: float
    tangency_max: float

    def as_dict(self) -> dict:
        return dict(vars(self))


def _frame_term(geom: SurfacePointGeometry, nab: np.ndarray) -> np.ndarray:
    """lambda_2 g(nabla_{e1} X, e1) + lambda_1 g(nabla_{e2} X, e2)."""
    p = geom.principal_chart
    gm = geom.induced_metric
    t = np.einsum("...ia,...ac,...cb,...ib->...i", p, nab, gm, p)
    return geom.lambda2 * t[..., 0] + geom.lambda1 * t[..., 1]


def _frame_divergence_terms(geom: SurfacePointGeometry, comps):
    nab = covariant_derivative(geom, comps)
    lhs = _frame_term(geom, nab)
    xv = np.stack([c.value for c in comps], -1)
    ax = np.einsum("...ab,...b->...a", geom.shape_operator, xv)
    w_ax = omega_of(geom, geom.chart_to_ambient(ax))
    b_xn = np.einsum("...i,...ij,...j->...", geom.chart_to_ambient(xv),
                     geom.ambient.b_tensor, geom.normal)
    A = geom.A_jet
    H = geom.H_jet
    ax_j = [A[a][0] * comps[0] + A[a][1] * comps[1] for a in range(2)]
    div = divergence_jet(geom, [2 * H * comps[0] - ax_j[0], 2 * H * comps[1] - ax_j[1]]).value
    return lhs - 0.5 * w_ax, lhs - 0.5 * b_xn, div, geom.tangency_residual


def _identity(name, surface, factor, grid, fn, form, threads, order=3):
    tangent, general, div, tang, dens = evaluate_on_grid(
        surface, factor, grid.nodes, lambda g: fn(g) + (g.area_density,), order, threads)
    ip = quadrature_sum(grid, tangent, dens)
    ig = quadrature_sum(grid, general, dens)
    idv = quadrature_sum(grid, div, dens)
    resid = abs(ip) if form == "tangent" else abs(ig)
    return IdentityReport(name, resid, ip, ig, idv, float(np.max(np.abs(general - div))),
                          float(np.max(tang)))


def frame_divergence_identity(surface, factor, X, grid, form: str = "tangent", threads=None) -> IdentityReport:
    """Integral of l2 g(nabla_{e1}X, e1) + l1 g(nabla_{e2}X, e2) - omega(AX)/2.

    ``X`` is three ambient expressions, projected g~-orthogonally onto the
    tangent plane.  ``form="general"`` uses B(X, N) in place of omega(AX);
    the two agree on surfaces tangent to omega#.  ``pointwise_max`` compares
    the general integrand with div(2HX) - div(AX).
    """
    def fn(geom):
        return _frame_divergence_terms(geom, tangent_field_jets(geom, X))
    return _identity("frame_divergence", surface, factor, grid, fn, form, threads)


def _side(geom, f, g):
    """Integrand l2 f Hess_g(e1,e1) + l1 f Hess_g(e2,e2) - f omega(A grad g) / 2,
    and the same with B(grad g, N)."""
    hg = principal_hessian(geom, g)
    lhs = f.value * (geom.lambda2 * hg[..., 0, 0] + geom.lambda1 * hg[..., 1, 1])
    grad = np.stack([c.value for c in surface_gradient_jets(geom, g)], -1)
    agrad = geom.chart_to_ambient(np.einsum("...ab,...b->...a", geom.shape_operator, grad))
    b = np.einsum("...i,...ij,...j->...", geom.chart_to_ambient(grad), geom.ambient.b_tensor,
                  geom.normal)
    return lhs - 0.5 * f.value * omega_of(geom, agrad), lhs - 0.5 * f.value * b


def hessian_symmetry_identity(surface, factor, f, g, grid, form: str = "tangent", threads=None) -> IdentityReport:
    """|S(f, g) - S(g, f)| for the symmetric Hessian pairing of two scalars.

    ``divergence_integral`` holds the integral of div(2HX) - div(AX) with
    X = f grad g - g grad f, and ``pointwise_max`` compares the general
    integrand difference against it.
    """
    def fn(geom):
        fj, gj = field_jet(geom, f), field_jet(geom, g)
        p1, g1 = _side(geom, fj, gj)
        p2, g2 = _side(geom, gj, fj)
        fg = surface_gradient_jets(geom, gj)
        gf = surface_gradient_jets(geom, fj)
        comps = [fj.truncate(fg[a].order) * fg[a] - gj.truncate(gf[a].order) * gf[a] for a in range(2)]
        A, H = geom.A_jet, geom.H_jet
        ax = [A[a][0] * comps[0] + A[a][1] * comps[1] for a in range(2)]
        div = divergence_jet(geom, [2 * H * comps[0] - ax[0], 2 * H * comps[1] - ax[1]]).value
        return p1 - p2, g1 - g2, div, geom.tangency_residual
    return _identity("hessian_symmetry", surface, factor, grid, fn, form, threads, order=4)


def hessian_pairing(surface, factor, f, g, grid, threads=None) -> float:
    """S(f, g) on its own (the tangent form)."""
    def fn(geom):
        p, _ = _side(geom, field_jet(geom, f), field_jet(geom, g))
        return p, geom.area_density
    vals, dens = evaluate_on_grid(surface, factor, grid.nodes, fn, 4, threads)
    return quadrature_sum(grid, vals, dens)


def euler_characteristic_estimate(surface, factor, grid, threads=None) -> IntegralReport:
    """(5 / 16 pi) * integral of |w#|^2; reported next to Gauss-Bonnet chi."""
    rep = integrate(surface, factor, "omega_sharp_sq", grid, threads=threads)
    c = 5.0 / (16.0 * math.pi)
    return IntegralReport("chi_estimate", c * rep.value, c * rep.error, rep.resolution,
                          rep.coarse_resolution, c * rep.coarse_value, c * rep.integrand_min,
                          c * rep.integrand_max)


def minimality_integral(surface, factor, grid, threads=None) -> IntegralReport:
    """Integral of H |w#|^2."""
    return integrate(surface, factor, "H_omega_sharp_sq", grid, threads=threads)


def frame_balance_report(surface, factor, grid, threads=None) -> dict:
    """Sup-norms over the nodes of omega(e1)^2 - omega(e2)^2 and of
    K~ - (|w#|^2 / 4 - div w# / 2), with e_i the principal directions and
    div the surface divergence of the tangential part of w#.

    Both vanish only under extra hypotheses (tangency, a special frame), so
    they are reported, never asserted.
    """
    def fn(geom):
        e = geom.principal_directions
        w1 = omega_of(geom, e[..., 0, :])
        w2 = omega_of(geom, e[..., 1, :])
        div = divergence_of_ambient(geom, omega_sharp_jets(geom), "tangential")
        closed = 0.25 * geom.omega_sharp_norm_sq - 0.5 * div
        return w1 ** 2 - w2 ** 2, geom.ambient_sectional - closed, geom.tangency_residual
    dw, dk, tang = evaluate_on_grid(surface, factor, grid.nodes, fn, 3, threads)
    return {"omega_frame_sup": float(np.max(np.abs(dw))),
            "sectional_closed_form_sup": float(np.max(np.abs(dk))),
            "tangency_max": float(np.max(tang)), "resolution": list(grid.resolution)}
