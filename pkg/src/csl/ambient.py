"""Geometry of the conformally flat ambient space (R^3, e^sigma <,>).

All tensors are expressed in the Cartesian coordinate basis.  Index
conventions, with batch axes leading:

* ``christoffels[..., k, i, j]``  = Gamma^k_ij
* ``riemann[..., i, j, k, l]``    = l-th component of R(d_i, d_j) d_k, where
  R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z
* ``nabla_omega_sharp[..., j, l]`` = l-th component of nabla_{d_j} omega#
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .expr import FieldExpr, as_field, jet_eval, ln_of, scale
from .jets import TaylorJet

EYE = np.eye(3)


@dataclass(frozen=True)
class ConformalFactor:
    """The conformal exponent sigma of g~ = exp(sigma) <,>."""

    sigma: FieldExpr
    harmonic_intent: bool = False
    validity_note: str = ""
    name: str = ""

    @property
    def is_zero(self) -> bool:
        from .expr import Const
        return isinstance(self.sigma.root, Const) and self.sigma.root.value == 0.0

    def jet(self, points, order: int) -> TaylorJet:
        """3-variable jet of sigma at ``points`` (shape ``batch + (3,)``)."""
        points = np.asarray(points, dtype=float)
        if self.is_zero:
            return TaylorJet.constant(np.zeros(points.shape[:-1]), 3, order)
        return jet_eval(self.sigma, np.moveaxis(points, -1, 0), 3, order,
                        variables=("x", "y", "z"))


def factor_from_expr(sigma, harmonic_intent: bool = False, name: str = "",
                     validity_note: str = "") -> ConformalFactor:
    return ConformalFactor(as_field(sigma), harmonic_intent, validity_note, name)


def harmonic_factor_from_potential(h, name: str = "", validity_note: str = "") -> ConformalFactor:
    """sigma = 2 ln h, harmonic for g~ whenever h is Euclidean-harmonic.

    In three dimensions Delta_g~ sigma = e^-sigma (Delta sigma + |grad sigma|^2 / 2),
    and with sigma = 2 ln h this equals 2 e^-sigma Delta h / h.
    """
    h = as_field(h)
    sigma = scale(2.0, ln_of(h))
    sigma = FieldExpr(sigma.root, f"2*ln({h.text or h})")
    note = validity_note or f"requires {h.text or h} > 0"
    return ConformalFactor(sigma, True, note, name or f"harmonic_potential[{h.text or h}]")


@dataclass(frozen=True)
class AmbientPointGeometry:
    point: np.ndarray
    sigma_jet: TaylorJet = field(repr=False)
    sigma: np.ndarray
    omega: np.ndarray
    omega_sharp: np.ndarray
    metric: np.ndarray
    christoffels: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    b_tensor: np.ndarray
    nabla_omega_sharp: np.ndarray
    harmonic_residual: np.ndarray

    @property
    def omega_sharp_norm_sq(self) -> np.ndarray:
        return np.exp(-self.sigma) * np.sum(self.omega ** 2, axis=-1)

    def g(self, a, b) -> np.ndarray:
        """g~(a, b) for ambient vectors with trailing axis 3."""
        return np.exp(self.sigma) * np.sum(np.asarray(a) * np.asarray(b), axis=-1)

    def curvature(self, x, y, z) -> np.ndarray:
        """The vector R~(x, y) z."""
        return np.einsum("...ijkl,...i,...j,...k->...l", self.riemann, x, y, z)


def _derivs(sig: TaylorJet):
    """Value, gradient, Hessian and (if available) third derivatives, batch-first."""
    s = sig.value
    grad = np.moveaxis(np.stack([sig.partial(e) for e in EYE.astype(int)]), 0, -1)
    hess = np.empty(s.shape + (3, 3))
    for i in range(3):
        for j in range(3):
            a = [0, 0, 0]
            a[i] += 1
            a[j] += 1
            hess[..., i, j] = sig.partial(a)
    third = None
    if sig.order >= 3:
        third = np.empty(s.shape + (3, 3, 3))
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    a = [0, 0, 0]
                    a[i] += 1
                    a[j] += 1
                    a[k] += 1
                    third[..., i, j, k] = sig.partial(a)
    return s, grad, hess, third


def christoffel_symbols(grad: np.ndarray) -> np.ndarray:
    """Gamma^k_ij = (delta^k_i s_j + delta^k_j s_i - delta_ij s_k) / 2."""
    return 0.5 * (np.einsum("ki,...j->...kij", EYE, grad)
                  + np.einsum("kj,...i->...kij", EYE, grad)
                  - np.einsum("ij,...k->...kij", EYE, grad))


def _christoffel_derivs(hess: np.ndarray) -> np.ndarray:
    """dGamma[..., m, k, i, j] = d_m Gamma^k_ij."""
    return 0.5 * (np.einsum("ki,...jm->...mkij", EYE, hess)
                  + np.einsum("kj,...im->...mkij", EYE, hess)
                  - np.einsum("ij,...km->...mkij", EYE, hess))


def _riemann_direct(grad, hess) -> np.ndarray:
    gam = christoffel_symbols(grad)
    dgam = _christoffel_derivs(hess)
    # R(d_i, d_j) d_k = (d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik) d_l
    r = (np.einsum("...iljk->...ijkl", dgam) - np.einsum("...jlik->...ijkl", dgam)
         + np.einsum("...lim,...mjk->...ijkl", gam, gam)
         - np.einsum("...ljm,...mik->...ijkl", gam, gam))
    return r


def _b_tensor(grad, hess) -> np.ndarray:
    return hess - 0.5 * np.einsum("...i,...j->...ij", grad, grad)


def _nabla_omega_sharp(s, grad, hess) -> np.ndarray:
    es = np.exp(-s)[..., None, None]
    osh = np.exp(-s)[..., None] * grad
    gam = christoffel_symbols(grad)
    flat = es * (hess - np.einsum("...j,...l->...jl", grad, grad))
    return flat + np.einsum("...ljm,...m->...jl", gam, osh)


def _riemann_transform(s, grad, hess) -> np.ndarray:
    """Curvature assembled from B, g~, omega, omega# and nabla~ omega#.

    R(X,Y)Z = 1/2 {B(X,Z)Y - B(Y,Z)X + g(X,Z) nabla_Y w# - g(Y,Z) nabla_X w#}
              - 1/4 (g(Y,Z) w(X) - g(X,Z) w(Y)) w#
    The flat background contributes no curvature.
    """
    b = _b_tensor(grad, hess)
    es = np.exp(s)[..., None, None, None, None]
    osh = np.exp(-s)[..., None] * grad
    nos = _nabla_omega_sharp(s, grad, hess)
    r = 0.5 * (np.einsum("...ik,jl->...ijkl", b, EYE)
               - np.einsum("...jk,il->...ijkl", b, EYE)
               + es * np.einsum("ik,...jl->...ijkl", EYE, nos)
               - es * np.einsum("jk,...il->...ijkl", EYE, nos))
    r = r - 0.25 * es * (np.einsum("jk,...i,...l->...ijkl", EYE, grad, osh)
                         - np.einsum("ik,...j,...l->...ijkl", EYE, grad, osh))
    return r


def _harmonic_residual(s, grad, hess) -> np.ndarray:
    gam = christoffel_symbols(grad)
    trace = np.trace(hess, axis1=-2, axis2=-1) - np.einsum("...kii,...k->...", gam, grad)
    return np.exp(-s) * trace


def geometry_from_jet(points, sig: TaylorJet) -> AmbientPointGeometry:
    if sig.order < 2:
        raise ValueError("ambient geometry needs a sigma jet of order >= 2")
    s, grad, hess, _ = _derivs(sig)
    riemann = _riemann_direct(grad, hess)
    return AmbientPointGeometry(
        point=np.asarray(points, dtype=float),
        sigma_jet=sig,
        sigma=s,
        omega=grad,
        omega_sharp=np.exp(-s)[..., None] * grad,
        metric=np.exp(s)[..., None, None] * EYE,
        christoffels=christoffel_symbols(grad),
        riemann=riemann,
        ricci=np.einsum("...ijki->...jk", riemann),
        b_tensor=_b_tensor(grad, hess),
        nabla_omega_sharp=_nabla_omega_sharp(s, grad, hess),
        harmonic_residual=_harmonic_residual(s, grad, hess),
    )


def ambient_at(factor: ConformalFactor, point, order: int = 3) -> AmbientPointGeometry:
    """Ambient geometry at one point or a batch of points (trailing axis 3)."""
    return geometry_from_jet(point, factor.jet(point, order))


def curvature_direct(factor: ConformalFactor, point) -> np.ndarray:
    """Riemann tensor from derivatives of the Christoffel symbols."""
    _, grad, hess, _ = _derivs(factor.jet(point, 2))
    return _riemann_direct(grad, hess)


def curvature_via_transform(factor: ConformalFactor, point) -> np.ndarray:
    """Riemann tensor from the conformal transformation law."""
    s, grad, hess, _ = _derivs(factor.jet(point, 2))
    return _riemann_transform(s, grad, hess)


def harmonicity_residual(factor: ConformalFactor, point) -> np.ndarray:
    """tr_g~ nabla~^2 sigma; zero exactly where sigma is g~-harmonic."""
    s, grad, hess, _ = _derivs(factor.jet(point, 2))
    return _harmonic_residual(s, grad, hess)


def lower(riemann: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Fully covariant Rm(X, Y, Z, W) = g~(R(X, Y)Z, W)."""
    return np.exp(sigma)[..., None, None, None, None] * riemann


def sectional_curvature(geom: AmbientPointGeometry, a, b) -> np.ndarray:
    """g~(R(a, b)b, a) / (|a|^2 |b|^2 - g~(a, b)^2)."""
    num = geom.g(geom.curvature(a, b, b), a)
    den = geom.g(a, a) * geom.g(b, b) - geom.g(a, b) ** 2
    return num / den
