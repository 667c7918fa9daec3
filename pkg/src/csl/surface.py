"""Closed parametric surfaces in (R^3, e^sigma <,>).

The Weingarten operator is A(X) = -nabla~_X N.  With the default inward
orientation a round sphere of radius r has principal curvatures 1/r > 0.

Everything is evaluated for a batch of chart points at once.  The chart
jets of the immersion drive the whole pipeline, so derived scalars such as
H carry their own chart derivatives (order - 2 of them).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import jets
from .ambient import AmbientPointGeometry, ConformalFactor, geometry_from_jet
from .expr import FieldExpr, as_field, jet_eval
from .jets import TaylorJet

UMBILIC_TOL = 1e-9
GRAM_TOL = 1e-10


class RegularityError(ValueError):
    """The immersion is degenerate at some evaluation point."""


def dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def cross(a, b):
    return [a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0]]


# -- immersions ---------------------------------------------------------

@dataclass(frozen=True)
class ExprImmersion:
    """Immersion given by three expressions in the chart variables (u, v)."""

    components: tuple[FieldExpr, FieldExpr, FieldExpr]

    def chart_jets(self, u, v, order: int) -> list[TaylorJet]:
        uv = np.stack(np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float)))
        return [jet_eval(c, uv, 2, order, variables=("u", "v")) for c in self.components]


@dataclass(frozen=True, eq=False)
class ClosedSurface:
    """A closed immersed surface on a rectangular chart.

    ``topology`` is ``"sphere_like"`` (u periodic longitude, v latitude in
    (0, pi)) or ``"torus_like"`` (both axes periodic).  ``orientation``
    picks the sign of N: ``"inward"``, ``"outward"`` or ``"chart"``
    (along X_u x X_v).
    """

    topology: str
    immersion: object
    domain: tuple = ((0.0, 2 * np.pi), (0.0, np.pi))
    orientation: str = "inward"
    name: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.topology not in ("sphere_like", "torus_like"):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.orientation not in ("inward", "outward", "chart"):
            raise ValueError(f"unknown orientation {self.orientation!r}")

    @property
    def periodicity(self) -> tuple[bool, bool]:
        return (True, self.topology == "torus_like")

    def jets(self, u, v, order: int) -> list[TaylorJet]:
        return self.immersion.chart_jets(u, v, order)

    def position(self, u, v) -> np.ndarray:
        return np.stack([j.value for j in self.jets(u, v, 0)], axis=-1)

    def _coarse_grid(self, n: int = 24):
        (u0, u1), (v0, v1) = self.domain
        u = u0 + (u1 - u0) * (np.arange(n) + 0.5) / n
        v = v0 + (v1 - v0) * (np.arange(n) + 0.5) / n
        return np.meshgrid(u, v, indexing="ij")

    @cached_property
    def chart_outward(self) -> float:
        """+1 if X_u x X_v points out of the enclosed region, else -1.

        Decided by the sign of the enclosed volume integral of X . (X_u x X_v).
        """
        u, v = self._coarse_grid()
        x = self.jets(u, v, 1)
        xu = [j.deriv(0).value for j in x]
        xv = [j.deriv(1).value for j in x]
        pos = [j.value for j in x]
        vol = np.sum(dot(pos, cross(xu, xv)))
        return 1.0 if vol > 0 else -1.0

    @property
    def normal_sign(self) -> float:
        if self.orientation == "chart":
            return 1.0
        return self.chart_outward if self.orientation == "outward" else -self.chart_outward

    @cached_property
    def scale(self) -> float:
        """Diameter scale L (largest bounding-box extent)."""
        u, v = self._coarse_grid(32)
        p = self.position(u, v).reshape(-1, 3)
        return float(np.max(p.max(axis=0) - p.min(axis=0)))

    def with_orientation(self, orientation: str) -> ClosedSurface:
        return ClosedSurface(self.topology, self.immersion, self.domain, orientation,
                             self.name, dict(self.params))


# -- point geometry -----------------------------------------------------

@dataclass(eq=False)
class SurfacePointGeometry:
    """Geometry of a surface at a batch of chart points.

    Array fields carry the batch axes first.  Chart-basis matrices use
    ``[..., a, b]``; ``shape_operator[..., a, b]`` is A^a_b.
    """

    chart_point: np.ndarray
    position: np.ndarray
    tangent_basis: np.ndarray        # [..., a, 3]
    induced_metric: np.ndarray
    area_density: np.ndarray
    normal: np.ndarray
    second_fundamental_form: np.ndarray
    shape_operator: np.ndarray
    principal_curvatures: np.ndarray  # [..., 2], lambda_1 >= lambda_2
    principal_chart: np.ndarray      # [..., i, a] chart components of e_i
    principal_directions: np.ndarray  # [..., i, 3]
    mean_curvature: np.ndarray
    gauss_intrinsic: np.ndarray
    ambient_sectional: np.ndarray
    tangency_residual: np.ndarray
    tangency_angle: np.ndarray
    umbilic: np.ndarray
    ambient: AmbientPointGeometry = field(repr=False)
    order: int = 2
    # chart jets
    X: list = field(default=None, repr=False)
    sigma_jet: TaylorJet = field(default=None, repr=False)
    dsigma: list = field(default=None, repr=False)
    N: list = field(default=None, repr=False)
    g_jet: tuple = field(default=None, repr=False)      # (g11, g12, g22)
    h_jet: tuple = field(default=None, repr=False)      # (h11, h12, h22)
    A_jet: tuple = field(default=None, repr=False)      # ((A11, A12), (A21, A22))
    H_jet: TaylorJet = field(default=None, repr=False)
    detg_jet: TaylorJet = field(default=None, repr=False)

    @property
    def lambda1(self) -> np.ndarray:
        return self.principal_curvatures[..., 0]

    @property
    def lambda2(self) -> np.ndarray:
        return self.principal_curvatures[..., 1]

    @property
    def extrinsic_product(self) -> np.ndarray:
        return self.lambda1 * self.lambda2

    @property
    def gauss_extrinsic(self) -> np.ndarray:
        """K~ + lambda_1 lambda_2 (right-hand side of the Gauss equation)."""
        return self.ambient_sectional + self.extrinsic_product

    @property
    def gauss_residual(self) -> np.ndarray:
        return self.gauss_intrinsic - self.gauss_extrinsic

    @property
    def omega_sharp_norm_sq(self) -> np.ndarray:
        return self.ambient.omega_sharp_norm_sq

    def g(self, a, b) -> np.ndarray:
        return self.ambient.g(a, b)

    def chart_to_ambient(self, w) -> np.ndarray:
        """Tangent vector with chart components w[..., a] as an ambient vector."""
        return np.einsum("...a,...ak->...k", w, self.tangent_basis)

    def ginv_jet(self):
        g11, g12, g22 = self.g_jet
        det = self.detg_jet
        return (g22 / det, -g12 / det, g11 / det)


def _principal_frame(g: np.ndarray, h: np.ndarray):
    """Eigen-decomposition of A = g^-1 h with g-orthonormal eigenvectors.

    Returns (lambdas [..., 2] descending, chart vectors [..., i, a], umbilic mask).
    """
    lc = np.linalg.cholesky(g)
    li = np.linalg.inv(lc)
    s = li @ h @ np.swapaxes(li, -1, -2)
    s = 0.5 * (s + np.swapaxes(s, -1, -2))
    lam, w = np.linalg.eigh(s)
    lam = lam[..., ::-1]
    w = w[..., ::-1]
    vecs = np.swapaxes(np.swapaxes(li, -1, -2) @ w, -1, -2)   # [..., i, a]
    umb = np.abs(lam[..., 0] - lam[..., 1]) < UMBILIC_TOL
    if np.any(umb):
        e1 = np.zeros(g.shape[:-2] + (2,))
        e1[..., 0] = 1.0 / np.sqrt(g[..., 0, 0])
        e2 = np.zeros(g.shape[:-2] + (2,))
        e2[..., 0] = -g[..., 0, 1] / g[..., 0, 0]
        e2[..., 1] = 1.0
        n2 = np.sqrt(np.einsum("...a,...ab,...b->...", e2, g, e2))
        e2 = e2 / n2[..., None]
        gs = np.stack([e1, e2], axis=-2)
        vecs = np.where(umb[..., None, None], gs, vecs)
    return lam, vecs, umb


def _brioschi(gj, order: int, shape) -> np.ndarray:
    if order < 3:
        return np.full(shape, np.nan)
    E, F, G = gj
    Eu, Ev = E.partial((1, 0)), E.partial((0, 1))
    Fu, Fv = F.partial((1, 0)), F.partial((0, 1))
    Gu, Gv = G.partial((1, 0)), G.partial((0, 1))
    Evv, Fuv, Guu = E.partial((0, 2)), F.partial((1, 1)), G.partial((2, 0))
    e, f, g = E.value, F.value, G.value
    m1 = np.stack([
        np.stack([-0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev], -1),
        np.stack([Fv - 0.5 * Gu, e, f], -1),
        np.stack([0.5 * Gv, f, g], -1)], -2)
    z = np.zeros_like(e)
    m2 = np.stack([
        np.stack([z, 0.5 * Ev, 0.5 * Gu], -1),
        np.stack([0.5 * Ev, e, f], -1),
        np.stack([0.5 * Gu, f, g], -1)], -2)
    return (np.linalg.det(m1) - np.linalg.det(m2)) / (e * g - f * f) ** 2


def surface_at(surface: ClosedSurface, factor: ConformalFactor, uv, order: int = 3) -> SurfacePointGeometry:
    """Full point geometry at chart points ``uv`` (shape ``batch + (2,)``)."""
    if order < 2:
        raise ValueError("surface geometry needs jet order >= 2")
    uv = np.asarray(uv, dtype=float)
    u, v = uv[..., 0], uv[..., 1]
    X = surface.jets(u, v, order)
    pos = np.stack([x.value for x in X], axis=-1)
    sig3 = factor.jet(pos, order)
    amb = geometry_from_jet(pos, sig3)
    if factor.is_zero:
        s = TaylorJet.constant(np.zeros(u.shape), 2, order)
        ds = [TaylorJet.constant(np.zeros(u.shape), 2, order - 1) for _ in range(3)]
    else:
        s = sig3.compose(X)
        ds = [sig3.deriv(i).compose(X) for i in range(3)]

    xu = [x.deriv(0) for x in X]
    xv = [x.deriv(1) for x in X]
    E, F, G = dot(xu, xu), dot(xu, xv), dot(xv, xv)
    es = jets.exp(s)
    g11, g12, g22 = es * E, es * F, es * G
    detg = g11 * g22 - g12 * g12
    if np.any(~(detg.value > GRAM_TOL)):
        bad = np.argwhere(~(detg.value > GRAM_TOL).reshape(-1))[0, 0]
        raise RegularityError(
            f"degenerate tangent basis at chart point {uv.reshape(-1, 2)[bad]}")

    c = cross(xu, xv)
    cn = jets.sqrt(dot(c, c))
    sign = surface.normal_sign
    inv_len = jets.exp(-0.5 * s) / cn * sign
    N = [ci * inv_len for ci in c]
    w_n = dot(N, ds)  # omega(N)

    xuu, xuv, xvv = [x.deriv(0) for x in xu], [x.deriv(1) for x in xu], [x.deriv(1) for x in xv]
    h11 = es * (dot(N, xuu) - 0.5 * E * w_n)
    h12 = es * (dot(N, xuv) - 0.5 * F * w_n)
    h22 = es * (dot(N, xvv) - 0.5 * G * w_n)
    A11 = (g22 * h11 - g12 * h12) / detg
    A12 = (g22 * h12 - g12 * h22) / detg
    A21 = (g11 * h12 - g12 * h11) / detg
    A22 = (g11 * h22 - g12 * h12) / detg
    H = 0.5 * (A11 + A22)

    gm = np.stack([np.stack([g11.value, g12.value], -1),
                   np.stack([g12.value, g22.value], -1)], -2)
    hm = np.stack([np.stack([h11.value, h12.value], -1),
                   np.stack([h12.value, h22.value], -1)], -2)
    am = np.stack([np.stack([A11.value, A12.value], -1),
                   np.stack([A21.value, A22.value], -1)], -2)
    lam, pchart, umb = _principal_frame(gm, hm)
    tb = np.stack([np.stack([x.value for x in xu], -1),
                   np.stack([x.value for x in xv], -1)], -2)
    pdir = np.einsum("...ia,...ak->...ik", pchart, tb)
    e1, e2 = pdir[..., 0, :], pdir[..., 1, :]
    ksec = amb.g(amb.curvature(e1, e2, e2), e1)

    w1 = np.sum(amb.omega * e1, -1)
    w2 = np.sum(amb.omega * e2, -1)
    angle = np.arctan2(np.abs(w2), np.abs(w1))

    return SurfacePointGeometry(
        chart_point=uv,
        position=pos,
        tangent_basis=tb,
        induced_metric=gm,
        area_density=np.sqrt(detg.value),
        normal=np.stack([n.value for n in N], -1),
        second_fundamental_form=hm,
        shape_operator=am,
        principal_curvatures=lam,
        principal_chart=pchart,
        principal_directions=pdir,
        mean_curvature=H.value,
        gauss_intrinsic=_brioschi((g11, g12, g22), order, u.shape),
        ambient_sectional=ksec,
        tangency_residual=np.abs(w_n.value),
        tangency_angle=angle,
        umbilic=umb,
        ambient=amb,
        order=order,
        X=X, sigma_jet=s, dsigma=ds, N=N,
        g_jet=(g11, g12, g22), h_jet=(h11, h12, h22),
        A_jet=((A11, A12), (A21, A22)), H_jet=H, detg_jet=detg,
    )


# -- chart fields and surface operators ---------------------------------

def field_jet(geom: SurfacePointGeometry, spec, order: int | None = None) -> TaylorJet:
    """Chart jet of a scalar field along the surface.

    ``spec`` may be a TaylorJet, a number, an expression in (u, v), or an
    expression in ambient coordinates (x, y, z) pulled back through X.
    """
    order = geom.order if order is None else order
    if isinstance(spec, TaylorJet):
        return spec
    if callable(spec) and not isinstance(spec, (str, FieldExpr)):
        return spec(geom)
    e = as_field(spec)
    shape = geom.chart_point.shape[:-1]
    if e.variables & {"x", "y", "z"}:
        if e.variables & {"u", "v"}:
            raise ValueError("field mixes chart and ambient variables")
        env = dict(zip(("x", "y", "z"), (x.truncate(order) for x in geom.X)))
        out = e.evaluate(env)
    elif e.variables:
        uv = np.moveaxis(geom.chart_point, -1, 0)
        out = jet_eval(e, uv, 2, order, variables=("u", "v"))
    else:
        out = e.evaluate({})
    if not isinstance(out, TaylorJet):
        out = TaylorJet.constant(np.broadcast_to(out, shape), 2, order)
    return out


def tangent_field_jets(geom: SurfacePointGeometry, vec) -> list[TaylorJet]:
    """Chart components Y^a of the g~-orthogonal tangential projection of an
    ambient vector field given as three jets or three expressions."""
    comps = [field_jet(geom, c, geom.order - 1) for c in vec]
    es = jets.exp(geom.sigma_jet)
    xu = [x.deriv(0) for x in geom.X]
    xv = [x.deriv(1) for x in geom.X]
    pu = es * dot(comps, xu)
    pv = es * dot(comps, xv)
    gi11, gi12, gi22 = geom.ginv_jet()
    return [gi11 * pu + gi12 * pv, gi12 * pu + gi22 * pv]


def induced_christoffels(geom: SurfacePointGeometry):
    """Jets of Gamma^c_ab of the induced metric, indexed [c][a][b]."""
    g11, g12, g22 = geom.g_jet
    gl = [[g11, g12], [g12, g22]]
    dg = [[[gl[a][b].deriv(c) for c in range(2)] for b in range(2)] for a in range(2)]
    gi11, gi12, gi22 = geom.ginv_jet()
    gi = [[gi11, gi12], [gi12, gi22]]
    # first kind: [ab, d] = (d_a g_bd + d_b g_ad - d_d g_ab) / 2
    first = [[[0.5 * (dg[b][d][a] + dg[a][d][b] - dg[a][b][d]) for d in range(2)]
              for b in range(2)] for a in range(2)]
    return [[[gi[c][0] * first[a][b][0] + gi[c][1] * first[a][b][1]
              for b in range(2)] for a in range(2)] for c in range(2)]


def surface_gradient_jets(geom: SurfacePointGeometry, phi: TaylorJet) -> list[TaylorJet]:
    gi11, gi12, gi22 = geom.ginv_jet()
    pu, pv = phi.deriv(0), phi.deriv(1)
    return [gi11 * pu + gi12 * pv, gi12 * pu + gi22 * pv]


def divergence_jet(geom: SurfacePointGeometry, comps) -> TaylorJet:
    """Jet of (1/sqrt g) d_a (sqrt g Y^a) for chart components Y^a."""
    sq = jets.sqrt(geom.detg_jet)
    flux = (sq * comps[0]).deriv(0) + (sq * comps[1]).deriv(1)
    return flux / sq


def laplacian_jet(geom: SurfacePointGeometry, phi: TaylorJet) -> TaylorJet:
    return divergence_jet(geom, surface_gradient_jets(geom, phi))


def hessian(geom: SurfacePointGeometry, phi: TaylorJet) -> np.ndarray:
    """Surface Hessian Hess_phi(d_a, d_b) as a batch of 2x2 matrices."""
    if phi.order < 2:
        raise jets.JetError("Hessian needs a field jet of order >= 2")
    gam = induced_christoffels(geom)
    d1 = [phi.partial((1, 0)), phi.partial((0, 1))]
    out = np.empty(phi.batch_shape + (2, 2))
    for a in range(2):
        for b in range(2):
            alpha = [0, 0]
            alpha[a] += 1
            alpha[b] += 1
            out[..., a, b] = (phi.partial(alpha) - gam[0][a][b].value * d1[0]
                              - gam[1][a][b].value * d1[1])
    return out


def principal_hessian(geom: SurfacePointGeometry, phi: TaylorJet) -> np.ndarray:
    """Hess_phi(e_i, e_j) in the principal frame."""
    hs = hessian(geom, phi)
    p = geom.principal_chart
    return np.einsum("...ia,...ab,...jb->...ij", p, hs, p)


def covariant_derivative(geom: SurfacePointGeometry, comps) -> np.ndarray:
    """(nabla_a Y)^c for a tangent field with chart component jets, [..., a, c]."""
    gam = induced_christoffels(geom)
    out = np.empty(geom.chart_point.shape[:-1] + (2, 2))
    for a in range(2):
        for c in range(2):
            out[..., a, c] = (comps[c].deriv(a).value + gam[c][a][0].value * comps[0].value
                              + gam[c][a][1].value * comps[1].value)
    return out


def shape_operator(surface, factor, uv) -> np.ndarray:
    """Matrix of A in the chart basis, ``[..., a, b]`` = A^a_b."""
    return surface_at(surface, factor, uv, 2).shape_operator


def surface_laplacian(surface, factor, uv, scalar, order: int = 4) -> np.ndarray:
    """Laplace-Beltrami of a chart field; ``scalar`` may be ``"H"``."""
    geom = surface_at(surface, factor, uv, order)
    phi = geom.H_jet if isinstance(scalar, str) and scalar == "H" else field_jet(geom, scalar)
    if phi.order < 2:
        raise jets.JetError("Laplacian needs a field jet of order >= 2")
    return laplacian_jet(geom, phi).value


def omega_sharp_jets(geom: SurfacePointGeometry) -> list[TaylorJet]:
    em = jets.exp(-geom.sigma_jet)
    return [em * d for d in geom.dsigma]


def surface_divergence(surface, factor, uv, tangent_field, mode: str = "tangential",
                       order: int = 3) -> np.ndarray:
    """Surface divergence of an ambient vector field along the surface.

    ``tangent_field`` is three expressions or ``"omega_sharp"``.  With
    ``mode="tangential"`` this is div of the g~-tangential projection; with
    ``mode="frame_trace"`` it is sum_i g~(nabla~_{e_i} V, e_i), which differs
    by -2H g~(V, N) for fields with a normal component.
    """
    geom = surface_at(surface, factor, uv, order)
    if isinstance(tangent_field, str) and tangent_field == "omega_sharp":
        vec = omega_sharp_jets(geom)
    else:
        vec = [field_jet(geom, c, order - 1) for c in tangent_field]
    return divergence_of_ambient(geom, vec, mode)


def divergence_of_ambient(geom: SurfacePointGeometry, vec, mode: str = "tangential") -> np.ndarray:
    div_t = divergence_jet(geom, tangent_field_jets(geom, vec)).value
    if mode == "tangential":
        return div_t
    if mode == "frame_trace":
        normal_part = geom.g(np.stack([c.value for c in vec], -1), geom.normal)
        return div_t - 2.0 * geom.mean_curvature * normal_part
    raise ValueError(f"unknown divergence mode {mode!r}")


def ambient_divergence_omega_sharp(geom: SurfacePointGeometry) -> np.ndarray:
    """Full ambient Div omega# = div omega# + g~(nabla~_N omega#, N)."""
    return np.trace(geom.ambient.nabla_omega_sharp, axis1=-2, axis2=-1)


def codazzi_residual(surface, factor, uv, X, Y, Z, form: str = "tangent", geom=None) -> np.ndarray:
    """|g~((nabla_X A)Y - (nabla_Y A)X, Z) - RHS| for chart vectors X, Y, Z.

    ``form="tangent"``: RHS = (omega(AY) g~(X,Z) - omega(AX) g~(Y,Z)) / 2, which
    presumes the surface is tangent to omega#.  ``form="general"`` replaces
    omega(A.) by B(., N) and holds for every surface.
    """
    geom = surface_at(surface, factor, uv, 3) if geom is None else geom
    X, Y, Z = (np.broadcast_to(np.asarray(w, float), geom.chart_point.shape) for w in (X, Y, Z))
    gam = induced_christoffels(geom)
    A = geom.A_jet
    # (nabla_a A)^c_b
    nab = np.empty(geom.chart_point.shape[:-1] + (2, 2, 2))
    for a in range(2):
        for c in range(2):
            for b in range(2):
                val = A[c][b].deriv(a).value
                for d in range(2):
                    val = val + gam[c][a][d].value * A[d][b].value - gam[d][a][b].value * A[c][d].value
                nab[..., a, c, b] = val
    g = geom.induced_metric
    t = np.einsum("...acb,...a,...b->...c", nab, X, Y) - np.einsum("...acb,...a,...b->...c", nab, Y, X)
    lhs = np.einsum("...c,...ce,...e->...", t, g, Z)
    gxz = np.einsum("...a,...ab,...b->...", X, g, Z)
    gyz = np.einsum("...a,...ab,...b->...", Y, g, Z)
    if form == "tangent":
        ay = geom.chart_to_ambient(np.einsum("...ab,...b->...a", geom.shape_operator, Y))
        ax = geom.chart_to_ambient(np.einsum("...ab,...b->...a", geom.shape_operator, X))
        ty, tx = np.sum(geom.ambient.omega * ay, -1), np.sum(geom.ambient.omega * ax, -1)
    elif form == "general":
        b = geom.ambient.b_tensor
        ty = np.einsum("...i,...ij,...j->...", geom.chart_to_ambient(Y), b, geom.normal)
        tx = np.einsum("...i,...ij,...j->...", geom.chart_to_ambient(X), b, geom.normal)
    else:
        raise ValueError(f"unknown Codazzi form {form!r}")
    rhs = 0.5 * (ty * gxz - tx * gyz)
    return np.abs(lhs - rhs)
