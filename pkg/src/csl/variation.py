"""Normal variations X_t = X + t f N, finite-difference oracles and the
analytic first-variation formulas.

Every analytic formula here is paired with a central-difference oracle on
explicitly varied surfaces.  The varied immersion is built by jet
composition: the base surface is evaluated one order higher than requested
so that N (which costs one derivative) still has the requested order.

Sign conventions used by the analytic formulas are collected in
``CONVENTIONS`` and copied into every report.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .ambient import ConformalFactor
from .expr import BinOp, Const, FieldExpr, as_field, jet_eval
from .jets import TaylorJet
from .quadrature import (QuadratureGrid, evaluate_on_grid, omega_of, quadrature_sum,
                         willmore_el)
from .surface import (ClosedSurface, SurfacePointGeometry, cross, divergence_jet, dot,
                      field_jet, laplacian_jet, principal_hessian, surface_at,
                      surface_gradient_jets, tangent_field_jets)

CONVENTIONS = {
    "weingarten": "A(X) = -nabla~_X N; default orientation inward",
    "curvature": "R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z",
    "eigenvalue_variation": ("curvature term evaluated as g~(R~(e_i,N)N, e_i), the sectional "
                             "curvature of span(e_i, N); the literal g~(R~(N,e_i)N, e_i) has the "
                             "opposite sign under the curvature convention above and is reported "
                             "as 'literal'"),
    "delta_omega_sharp": "f nabla~_N omega#",
    "variation_curve": "straight line X + t f N in Cartesian coordinates",
}

FD_STEPS = (1e-4, 5e-5)


# -- variations ---------------------------------------------------------

@dataclass(frozen=True)
class NormalVariation:
    """Normal speed f, an expression in (u, v) or in ambient (x, y, z).

    Ambient expressions are composed with the base immersion, which keeps f
    well defined at the poles of sphere charts.
    """

    f: FieldExpr
    description: str = ""

    @classmethod
    def of(cls, f, description: str = "") -> NormalVariation:
        if isinstance(f, NormalVariation):
            return f
        e = as_field(f)
        return cls(e, description or (e.text or str(e)))

    def jet(self, X: list[TaylorJet], uv: np.ndarray, order: int) -> TaylorJet:
        """Chart jet of f given the base immersion jets X (order >= ``order``)."""
        e = self.f
        shape = uv.shape[1:]
        if e.variables & {"x", "y", "z"}:
            env = dict(zip(("x", "y", "z"), (x.truncate(order) for x in X)))
            out = e.evaluate(env)
        elif e.variables:
            out = jet_eval(e, uv, 2, order, variables=("u", "v"))
        else:
            out = e.evaluate({})
        if not isinstance(out, TaylorJet):
            out = TaylorJet.constant(np.broadcast_to(out, shape), 2, order)
        return out

    def scaled(self, c: float) -> NormalVariation:
        return NormalVariation(FieldExpr(BinOp("*", Const(float(c)), self.f.root)),
                               f"{c}*({self.description})")

    def __add__(self, other: NormalVariation) -> NormalVariation:
        return NormalVariation(FieldExpr(BinOp("+", self.f.root, other.f.root)),
                               f"({self.description})+({other.description})")


def random_ambient_expr(rng: np.random.Generator, amplitude: float = 0.3) -> str:
    """Smooth ambient expression c0 + c.x + a sin(b.x) with seeded coefficients.

    Coefficients are rounded to 4 decimals so the text (and hence every
    report that echoes it) is reproducible.
    """
    c = np.round(rng.uniform(-amplitude, amplitude, 5), 4)
    b = np.round(rng.uniform(-1.0, 1.0, 3), 4)
    return (f"{c[0]}+{c[1]}*x+{c[2]}*y+{c[3]}*z"
            f"+{c[4]}*sin({b[0]}*x+{b[1]}*y+{b[2]}*z)").replace("+-", "-")


def random_variation(rng: np.random.Generator, amplitude: float = 0.3) -> NormalVariation:
    """Random smooth normal speed, defined in ambient coordinates."""
    return NormalVariation.of(random_ambient_expr(rng, amplitude))


def random_vector_field(rng: np.random.Generator, amplitude: float = 0.3) -> tuple[str, str, str]:
    """Three random ambient expressions (a vector field on R^3)."""
    return tuple(random_ambient_expr(rng, amplitude) for _ in range(3))


def normal_frame_jets(surface: ClosedSurface, factor: ConformalFactor, u, v, order: int):
    """Immersion jets X (order ``order``) and g~-unit normal jets N (order - 1)."""
    X = surface.jets(u, v, order)
    xu = [x.deriv(0) for x in X]
    xv = [x.deriv(1) for x in X]
    c = cross(xu, xv)
    cn = jets.sqrt(dot(c, c))
    if factor.is_zero:
        scale = surface.normal_sign / cn
    else:
        pos = np.stack([x.value for x in X], -1)
        s = factor.jet(pos, order - 1).compose([x.truncate(order - 1) for x in X])
        scale = jets.exp(-0.5 * s) / cn * surface.normal_sign
    return X, [ci * scale for ci in c]


@dataclass(frozen=True, eq=False)
class VaryingImmersion:
    """Chart jets of X + t f N for a base surface."""

    base: ClosedSurface
    factor: ConformalFactor
    variation: NormalVariation
    t: float

    def chart_jets(self, u, v, order: int) -> list[TaylorJet]:
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        X, N = normal_frame_jets(self.base, self.factor, u, v, order + 1)
        if self.t == 0.0:
            return [x.truncate(order) for x in X]
        f = self.variation.jet(X, np.stack([u, v]), order)
        tf = self.t * f
        return [X[i].truncate(order) + tf * N[i] for i in range(3)]


def vary_surface(surface: ClosedSurface, factor: ConformalFactor, variation, t: float,
                 check: bool = True) -> ClosedSurface:
    """The varied surface X_t = X + t f N (same chart, same orientation rule)."""
    variation = NormalVariation.of(variation)
    out = ClosedSurface(surface.topology, VaryingImmersion(surface, factor, variation, float(t)),
                        surface.domain, surface.orientation, f"{surface.name}+t*f*N",
                        {"base": surface.params, "t": float(t), "f": variation.description})
    if check and t != 0.0:
        u, v = surface._coarse_grid(24)
        surface_at(out, factor, np.stack([u, v], -1), 2)   # raises RegularityError
    return out


# -- finite-difference oracle -------------------------------------------

POINT_QUANTITIES = {
    "lambda1": (2, lambda g: g.lambda1),
    "lambda2": (2, lambda g: g.lambda2),
    "H": (2, lambda g: g.mean_curvature),
    "K": (3, lambda g: g.gauss_intrinsic),
    "area_element": (2, lambda g: g.area_density),
    "metric": (2, lambda g: g.induced_metric),
    "shape_operator": (2, lambda g: g.shape_operator),
}

FUNCTIONALS = {
    "area": (2, lambda g: np.ones_like(g.area_density)),
    "total_H": (2, lambda g: g.mean_curvature),
    "willmore": (2, lambda g: g.mean_curvature ** 2),
    "gauss_bonnet": (3, lambda g: g.gauss_intrinsic),
}

QUANTITIES = sorted(set(POINT_QUANTITIES) | set(FUNCTIONALS))


@dataclass
class FDResult:
    value: np.ndarray | float
    error: np.ndarray | float
    steps: tuple
    coarse: np.ndarray | float
    fine: np.ndarray | float


def _evaluate_quantity(quantity, surface, factor, uv=None, grid=None, threads=None):
    if quantity in POINT_QUANTITIES:
        if uv is None:
            raise ValueError(f"{quantity!r} is a point quantity; pass uv")
        order, fn = POINT_QUANTITIES[quantity]
        return fn(surface_at(surface, factor, uv, order))
    if quantity in FUNCTIONALS:
        if grid is None:
            raise ValueError(f"{quantity!r} is a functional; pass a quadrature grid")
        order, fn = FUNCTIONALS[quantity]
        vals, dens = evaluate_on_grid(surface, factor, grid.nodes,
                                      lambda g: (fn(g), g.area_density), order, threads)
        return quadrature_sum(grid, vals, dens)
    raise KeyError(f"unknown quantity {quantity!r}; known: {QUANTITIES}")


def fd_delta(quantity: str, surface: ClosedSurface, factor: ConformalFactor, variation,
             uv=None, grid: QuadratureGrid | None = None, steps=None, threads=None) -> FDResult:
    """Richardson-extrapolated central difference of a quantity along X + t f N.

    D(t) = (Q(t) - Q(-t)) / 2t at t and t/2, value = (4 D(t/2) - D(t)) / 3.
    The error estimate |value - D(t/2)| bounds the error of the
    unextrapolated fine step, and so is conservative for the value.
    """
    variation = NormalVariation.of(variation)
    L = surface.scale
    steps = tuple(s * L for s in (steps or FD_STEPS))
    ds = []
    for t in steps:
        qp = _evaluate_quantity(quantity, vary_surface(surface, factor, variation, t, check=False),
                                factor, uv, grid, threads)
        qm = _evaluate_quantity(quantity, vary_surface(surface, factor, variation, -t, check=False),
                                factor, uv, grid, threads)
        ds.append((np.asarray(qp) - np.asarray(qm)) / (2 * t))
    d1, d2 = ds
    value = (4 * d2 - d1) / 3
    err = np.abs(value - d2)
    if np.ndim(value) == 0:
        value, err, d1, d2 = float(value), float(err), float(d1), float(d2)
    return FDResult(value, err, steps, d1, d2)


# -- reports ------------------------------------------------------------

def relative_discrepancy(analytic, oracle):
    """|a - o| / max(1, |o|): relative for values of unit size and above,
    absolute below."""
    a, o = np.asarray(analytic, float), np.asarray(oracle, float)
    return np.abs(a - o) / np.maximum(1.0, np.abs(o))


@dataclass
class VariationReport:
    quantity: str
    analytic: object
    fd: object
    fd_error: object
    steps: tuple
    discrepancy: float
    verdict: str
    conventions: dict = field(default_factory=lambda: dict(CONVENTIONS))
    flags: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        def plain(x):
            if isinstance(x, np.ndarray):
                return x.tolist()
            if isinstance(x, (np.floating, np.integer)):
                return x.item()
            if isinstance(x, dict):
                return {k: plain(v) for k, v in x.items()}
            return x
        return {k: plain(v) for k, v in vars(self).items()}


def make_report(quantity, analytic, fd: FDResult, gated: bool = True, flags=None, extra=None,
                tol: float = 1e-6) -> VariationReport:
    """Verdict = pass iff discrepancy < max(tol, 10 x fd error), for gated
    reports; ``report-only`` otherwise."""
    a = np.asarray(analytic, float)
    ok = np.isfinite(a)
    disc = relative_discrepancy(a[ok], np.asarray(fd.value)[ok]) if np.any(ok) else np.array([np.nan])
    ferr = relative_discrepancy(np.asarray(fd.error)[ok], 0.0) if np.any(ok) else np.array([np.nan])
    d = float(np.max(disc))
    extra = dict(extra or {})
    if not np.any(ok):
        gated = False
        extra["note"] = "no sample where the analytic value is defined (all umbilic)"
    if not gated:
        verdict = "report-only"
    else:
        verdict = "pass" if d < max(tol, 10 * float(np.max(ferr))) else "fail"
    return VariationReport(quantity, analytic, fd.value, fd.error, fd.steps, d, verdict,
                           flags=dict(flags or {}), extra=extra)


# -- analytic formulas --------------------------------------------------

def _geom_and_f(surface, factor, variation, uv, order):
    variation = NormalVariation.of(variation)
    geom = surface_at(surface, factor, uv, order)
    uvm = np.moveaxis(np.asarray(uv, float), -1, 0)
    f = variation.jet(geom.X, uvm, order - 1)
    return geom, f


def delta_area_element_analytic(surface, factor, variation, uv) -> np.ndarray:
    """-2 f H times the area density."""
    geom, f = _geom_and_f(surface, factor, variation, uv, 2)
    return -2.0 * f.value * geom.mean_curvature * geom.area_density


def delta_metric_analytic(surface, factor, variation, uv, X=None, Y=None) -> np.ndarray:
    """-2 f g~(AX, Y); the full chart matrix when X and Y are omitted."""
    geom, f = _geom_and_f(surface, factor, variation, uv, 2)
    m = -2.0 * f.value[..., None, None] * geom.second_fundamental_form
    if X is None:
        return m
    X = np.broadcast_to(np.asarray(X, float), geom.chart_point.shape)
    Y = np.broadcast_to(np.asarray(Y, float), geom.chart_point.shape)
    return np.einsum("...a,...ab,...b->...", X, m, Y)


def _curvature_matrix(geom: SurfacePointGeometry, literal: bool = False) -> np.ndarray:
    """[i, j] = g~(R~(e_i, N)N, e_j), or the literal g~(R~(N, e_i)N, e_j)."""
    e = geom.principal_directions
    n = geom.normal
    r = geom.ambient.riemann
    if literal:
        v = np.einsum("...abkl,...a,...ib,...k->...il", r, n, e, n)
    else:
        v = np.einsum("...abkl,...ia,...b,...k->...il", r, e, n, n)
    return np.exp(geom.ambient.sigma)[..., None, None] * np.einsum("...il,...jl->...ij", v, e)


def delta_weingarten_analytic(surface, factor, variation, uv, literal: bool = False) -> np.ndarray:
    """Matrix [i, j] = g~((delta A) e_j, e_i) in the principal frame:
    f (g~(R~(e_j,N)N, e_i) + lambda_i^2 delta_ij) + Hess_f(e_i, e_j)."""
    geom, f = _geom_and_f(surface, factor, variation, uv, 3)
    return _delta_weingarten(geom, f, literal)


def _delta_weingarten(geom, f, literal=False):
    curv = _curvature_matrix(geom, literal)
    lam2 = np.einsum("...i,ij->...ij", geom.principal_curvatures ** 2, np.eye(2))
    return f.value[..., None, None] * (curv + lam2) + principal_hessian(geom, f)


def delta_weingarten_fd_principal(surface, factor, variation, uv) -> FDResult:
    """FD of the chart matrix of A, expressed as [i, j] = g~((delta A) e_j, e_i)."""
    geom = surface_at(surface, factor, uv, 2)
    fd = fd_delta("shape_operator", surface, factor, variation, uv=uv)
    p = geom.principal_chart
    g = geom.induced_metric

    def conj(m):
        return np.einsum("...ia,...ab,...bc,...jc->...ij", p, g, m, p)
    return FDResult(conj(fd.value), np.abs(conj(fd.error)), fd.steps, conj(fd.coarse), conj(fd.fine))


def delta_eigenvalue_analytic(surface, factor, variation, uv, i: int, literal: bool = False) -> np.ndarray:
    """f (g~(R~(e_i,N)N, e_i) + lambda_i^2) + Hess_f(e_i, e_i), i in {1, 2}.

    At umbilic nodes the eigenvalue branches are only one-sided
    differentiable; the value is returned where both one-sided derivatives
    agree (delta A a multiple of the identity) and NaN otherwise, with a
    warning.
    """
    if i not in (1, 2):
        raise ValueError("eigenvalue index must be 1 or 2")
    geom, f = _geom_and_f(surface, factor, variation, uv, 3)
    m = _delta_weingarten(geom, f, literal)
    out = m[..., i - 1, i - 1].copy()
    if np.any(geom.umbilic):
        ev = np.linalg.eigvalsh(0.5 * (m + np.swapaxes(m, -1, -2)))
        same = np.abs(ev[..., 1] - ev[..., 0]) <= 1e-9 * np.maximum(1.0, np.abs(ev[..., 1]))
        branch = ev[..., 1] if i == 1 else ev[..., 0]
        out = np.where(geom.umbilic, np.where(same, branch, np.nan), out)
        if np.any(geom.umbilic & ~same):
            warnings.warn("umbilic nodes skipped: eigenvalue branches not differentiable there",
                          RuntimeWarning, stacklevel=2)
    return out


def umbilic_mask(surface, factor, uv) -> np.ndarray:
    return surface_at(surface, factor, uv, 2).umbilic


@dataclass
class DeltaKTerms:
    """Terms of the Gauss-curvature variation at a batch of points."""

    theorem_rhs: np.ndarray
    theorem_rhs_alt: np.ndarray
    classical: np.ndarray
    hessian_part: np.ndarray
    div_delta_omega_sharp: np.ndarray
    frame_part: np.ndarray
    f_part: np.ndarray
    tangency_max: float


def _nabla_n_omega_sharp_jets(geom: SurfacePointGeometry) -> list[TaylorJet]:
    """Chart jets of the ambient vector nabla~_N omega# along the surface."""
    sig = geom.ambient.sigma_jet
    X = geom.X
    o = geom.order - 2
    Xo = [x.truncate(o) for x in X]
    d1 = [sig.deriv(i).compose(Xo) for i in range(3)]
    d2 = [[sig.deriv(i).deriv(j).compose(Xo) for j in range(3)] for i in range(3)]
    s = geom.sigma_jet.truncate(o)
    em = jets.exp(-s)
    N = [n.truncate(o) for n in geom.N]
    osh = [em * d for d in d1]
    wn = dot(d1, N)
    sq = dot(d1, osh)
    out = []
    for l in range(3):
        t = sum(N[j] * (d2[j][l] - d1[j] * d1[l]) for j in range(3)) * em
        # Gamma^l_jm N^j omega#^m
        t = t + 0.5 * (N[l] * sq + wn * osh[l] - d1[l] * dot(N, osh))
        out.append(t)
    return out


def delta_gauss_curvature_terms(surface, factor, variation, uv) -> DeltaKTerms:
    """The Gauss-curvature variation formula, term by term.

    ``theorem_rhs`` is the full stated right-hand side with the 1/8
    coefficient; ``theorem_rhs_alt`` uses 1/2, the value obtained when
    delta|omega#|^2 carries the chain-rule factor 2 on g~(delta omega#,
    omega#).  ``classical`` is the sigma = 0 formula
    lambda_1 Hess_f(e2,e2) + lambda_2 Hess_f(e1,e1) + 2 f H lambda_1 lambda_2.
    """
    geom, f = _geom_and_f(surface, factor, variation, uv, 4)
    l1, l2, H = geom.lambda1, geom.lambda2, geom.mean_curvature
    hf = principal_hessian(geom, f)
    hess_part = l1 * hf[..., 1, 1] + l2 * hf[..., 0, 0]
    fv = f.value
    classical = hess_part + 2 * fv * H * l1 * l2

    e = geom.principal_directions
    nos = geom.ambient.nabla_omega_sharp
    es = np.exp(geom.ambient.sigma)
    t = es[..., None] * np.einsum("...ij,...jl,...il->...i", e, nos, e)
    frame_part = 0.5 * fv * ((l1 - l2) * t[..., 0] + (l2 - l1) * t[..., 1])

    fo = f.truncate(geom.order - 2)
    dw = [fo * c for c in _nabla_n_omega_sharp_jets(geom)]
    div_dw = divergence_jet(geom, tangent_field_jets(geom, dw)).value

    grad = np.stack([c.value for c in surface_gradient_jets(geom, f)], -1)
    w_grad = omega_of(geom, geom.chart_to_ambient(grad))
    w_agrad = omega_of(geom, geom.chart_to_ambient(np.einsum("...ab,...b->...a",
                                                             geom.shape_operator, grad)))
    wsq = geom.omega_sharp_norm_sq
    base = 2 * fv * H * l1 * l2 - H * w_grad - w_agrad
    f_part = base + fv * H * wsq / 8
    rhs = frame_part + hess_part - 0.5 * div_dw + f_part
    rhs_alt = rhs + fv * H * wsq * (0.5 - 0.125)
    return DeltaKTerms(rhs, rhs_alt, classical, hess_part, div_dw, frame_part, f_part,
                       float(np.max(geom.tangency_residual)))


def delta_gauss_curvature_analytic(surface, factor, variation, uv) -> np.ndarray:
    """The stated right-hand side of the Gauss-curvature variation theorem."""
    return delta_gauss_curvature_terms(surface, factor, variation, uv).theorem_rhs


def mean_el_residual(surface, factor, uv) -> np.ndarray:
    """|omega#|^2 - lambda_1 lambda_2 - K (intrinsic K)."""
    geom = surface_at(surface, factor, uv, 3)
    return geom.omega_sharp_norm_sq - geom.extrinsic_product - geom.gauss_intrinsic


def willmore_el_residual(surface, factor, uv) -> np.ndarray:
    """W = Delta H + H (|omega#|^2 - lambda_1 lambda_2 + 2 H^2 - K)."""
    geom = surface_at(surface, factor, uv, 4)
    return willmore_el(geom)


# -- functional comparisons ---------------------------------------------

def _hypothesis_flags(surface, factor, grid, threads=None) -> dict:
    tang, harm = evaluate_on_grid(surface, factor, grid.nodes,
                                  lambda g: (g.tangency_residual, np.abs(g.ambient.harmonic_residual)),
                                  2, threads)
    return {"tangency_max": float(np.max(tang)), "tangent": bool(np.max(tang) < 1e-10),
            "harmonic_residual_max": float(np.max(harm)), "harmonic": bool(np.max(harm) < 1e-9),
            "sigma_zero": factor.is_zero}


def _integral_of(surface, factor, variation, grid, fn, order, threads=None) -> float:
    variation = NormalVariation.of(variation)

    def work(geom):
        uvm = np.moveaxis(geom.chart_point, -1, 0)
        f = variation.jet(geom.X, uvm, 0)
        return f.value * fn(geom), geom.area_density
    vals, dens = evaluate_on_grid(surface, factor, grid.nodes, work, order, threads)
    return quadrature_sum(grid, vals, dens)


def mean_functional_check(surface, factor, variation, grid, threads=None) -> VariationReport:
    """-1/2 int f (l1 l2 + K - |w#|^2) against fd of int H.

    Gated when sigma = 0; report-only otherwise.
    """
    analytic = -0.5 * _integral_of(
        surface, factor, variation, grid,
        lambda g: g.extrinsic_product + g.gauss_intrinsic - g.omega_sharp_norm_sq, 3, threads)
    fd = fd_delta("total_H", surface, factor, variation, grid=grid, threads=threads)
    flags = _hypothesis_flags(surface, factor, grid, threads)
    return make_report("delta_total_H", analytic, fd, gated=factor.is_zero, flags=flags)


def willmore_functional_check(surface, factor, variation, grid, threads=None) -> VariationReport:
    """int f W against fd of int H^2.  Gated when sigma = 0."""
    analytic = _integral_of(surface, factor, variation, grid, willmore_el, 4, threads)
    fd = fd_delta("willmore", surface, factor, variation, grid=grid, threads=threads)
    flags = _hypothesis_flags(surface, factor, grid, threads)
    return make_report("delta_willmore", analytic, fd, gated=factor.is_zero, flags=flags)


def gauss_bonnet_variation(surface, factor, variation, grid, threads=None) -> VariationReport:
    """fd of int K against the topological value 0."""
    fd = fd_delta("gauss_bonnet", surface, factor, variation, grid=grid, threads=threads)
    return make_report("delta_gauss_bonnet", 0.0, fd, gated=True)


def area_variation_check(surface, factor, variation, grid, threads=None) -> VariationReport:
    """int -2 f H against fd of area."""
    analytic = _integral_of(surface, factor, variation, grid, lambda g: -2.0 * g.mean_curvature,
                            2, threads)
    fd = fd_delta("area", surface, factor, variation, grid=grid, threads=threads)
    return make_report("delta_area", analytic, fd, gated=True)


def eigenvalue_check(surface, factor, variation, uv, i: int) -> VariationReport:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        analytic = delta_eigenvalue_analytic(surface, factor, variation, uv, i)
        literal = delta_eigenvalue_analytic(surface, factor, variation, uv, i, literal=True)
    fd = fd_delta(f"lambda{i}", surface, factor, variation, uv=uv)
    ok = np.isfinite(analytic)
    lit = float(np.max(relative_discrepancy(literal[ok], np.asarray(fd.value)[ok]))) if np.any(ok) else math.nan
    return make_report(f"delta_lambda{i}", analytic, fd, gated=True,
                       extra={"literal_curvature_term_discrepancy": lit,
                              "skipped_umbilic": int(np.sum(~ok))})


def area_element_check(surface, factor, variation, uv) -> VariationReport:
    return make_report("delta_area_element", delta_area_element_analytic(surface, factor, variation, uv),
                       fd_delta("area_element", surface, factor, variation, uv=uv), gated=True)


def metric_check(surface, factor, variation, uv) -> VariationReport:
    return make_report("delta_metric", delta_metric_analytic(surface, factor, variation, uv),
                       fd_delta("metric", surface, factor, variation, uv=uv), gated=True)


def gauss_curvature_check(surface, factor, variation, uv) -> VariationReport:
    """Theorem right-hand side against fd of K; gated only when sigma = 0."""
    terms = delta_gauss_curvature_terms(surface, factor, variation, uv)
    fd = fd_delta("K", surface, factor, variation, uv=uv)
    alt = float(np.max(relative_discrepancy(terms.theorem_rhs_alt, fd.value)))
    classical = float(np.max(relative_discrepancy(terms.classical, fd.value)))
    return make_report("delta_K", terms.theorem_rhs, fd, gated=factor.is_zero,
                       flags={"tangency_max": terms.tangency_max,
                              "delta_omega_sharp": CONVENTIONS["delta_omega_sharp"]},
                       extra={"alt_coefficient_discrepancy": alt,
                              "classical_formula_discrepancy": classical})
