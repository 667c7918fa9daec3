"""Band-limited spectral representation of closed surfaces.

Torus-like surfaces store a truncated double Fourier series of each
Cartesian component.  Sphere-like surfaces are radial graphs
X = c + r(u, v) (sin v cos u, sin v sin u, cos v) with r expanded in a
Fourier series in longitude and Chebyshev polynomials in latitude
(v mapped affinely from [0, pi] to [-1, 1]).

A :class:`SpectralSurface` is itself an immersion: ``chart_jets`` returns
exact Taylor jets obtained by differentiating the basis, so it plugs into
:class:`~csl.surface.ClosedSurface` like any expression immersion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as cheb

from . import jets
from .jets import TaylorJet, multi_indices
from .surface import ClosedSurface

ALIAS_TOL = 1e-8
CHOP_TOL = 1e-14
FILTER_ORDER = 36
FILTER_FLOOR = 1e-36


class AliasingError(ValueError):
    """The requested band limit cannot represent the surface accurately."""


def _kvec(m: int) -> np.ndarray:
    return np.arange(-m, m + 1)


def _to_x(v):
    return 2.0 * np.asarray(v, float) / math.pi - 1.0


@dataclass(eq=False)
class SpectralSurface:
    """Truncated spectral immersion.

    ``coeffs``: complex, shape (3, 2 m_u + 1, 2 m_v + 1) for tori (Fourier
    modes -m..m on each axis) and (2 m_u + 1, m_v + 1) for radial spheres
    (Fourier in u times Chebyshev degree 0..m_v in v).
    """

    topology: str
    coeffs: np.ndarray
    bandlimit: tuple
    grid_shape: tuple
    center: tuple = (0.0, 0.0, 0.0)
    orientation: str = "inward"
    reconstruction_error: float = 0.0
    meta: dict = field(default_factory=dict)

    # -- immersion interface ------------------------------------------
    def _fourier_u(self, u, a):
        ku = _kvec(self.bandlimit[0])
        return np.exp(1j * np.multiply.outer(u, ku)) * (1j * ku) ** a

    def _derivative_table(self, u, v, order):
        """{(a, b): array} of chart derivatives of the stored fields."""
        u = np.asarray(u, float).reshape(-1)
        v = np.asarray(v, float).reshape(-1)
        out = {}
        if self.topology == "torus_like":
            kv = _kvec(self.bandlimit[1])
            ev = np.exp(1j * np.multiply.outer(v, kv))
            for a in range(order + 1):
                eu = self._fourier_u(u, a)
                t = np.einsum("pk,ckl->cpl", eu, self.coeffs)
                for b in range(order + 1 - a):
                    out[(a, b)] = np.einsum("cpl,pl->cp", t, ev * (1j * kv) ** b).real
        else:
            deg = self.bandlimit[1]
            x = _to_x(v)
            eye = np.eye(deg + 1)
            for a in range(order + 1):
                t = self._fourier_u(u, a) @ self.coeffs
                for b in range(order + 1 - a):
                    dmat = cheb.chebder(eye, m=b, axis=0) if b else eye
                    vb = cheb.chebvander(x, max(deg - b, 0))[:, :dmat.shape[0]] @ dmat
                    out[(a, b)] = (np.sum(t * vb, -1).real * (2.0 / math.pi) ** b)[None]
        return out

    def chart_jets(self, u, v, order: int) -> list[TaylorJet]:
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        shape = u.shape
        table = self._derivative_table(u, v, order)
        mi = multi_indices(2, order)
        fields = []
        for c in range(table[(0, 0)].shape[0]):
            d = np.stack([table[a][c] for a in mi]).reshape((len(mi),) + shape)
            fields.append(TaylorJet.from_derivatives(d, 2, order))
        if self.topology == "torus_like":
            return fields
        r = fields[0]
        uj = TaylorJet.variable(u, 0, 2, order)
        vj = TaylorJet.variable(v, 1, 2, order)
        sv = jets.sin(vj)
        dirs = [sv * jets.cos(uj), sv * jets.sin(uj), jets.cos(vj)]
        return [r * d + c for d, c in zip(dirs, self.center)]

    # -- helpers ------------------------------------------------------
    @property
    def domain(self):
        if self.topology == "torus_like":
            return ((0.0, 2 * math.pi), (0.0, 2 * math.pi))
        return ((0.0, 2 * math.pi), (0.0, math.pi))

    def as_surface(self, name: str = "spectral") -> ClosedSurface:
        return ClosedSurface(self.topology, self, self.domain, self.orientation, name,
                             {"bandlimit": list(self.bandlimit)})

    def nodes(self):
        return spectral_nodes(self.topology, self.grid_shape)

    def nodal_values(self) -> np.ndarray:
        """Stored fields at the fitting grid: X (3, n_u, n_v) or r (1, n_u, n_v)."""
        uu, vv = self.nodes()
        return self._derivative_table(uu, vv, 0)[(0, 0)].reshape((-1,) + uu.shape)

    def with_coeffs(self, coeffs, reconstruction_error=None) -> SpectralSurface:
        return SpectralSurface(self.topology, coeffs, self.bandlimit, self.grid_shape,
                               self.center, self.orientation,
                               self.reconstruction_error if reconstruction_error is None
                               else reconstruction_error, dict(self.meta))

    def to_json(self) -> dict:
        return {"topology": self.topology, "bandlimit": list(self.bandlimit),
                "grid_shape": list(self.grid_shape), "center": list(self.center),
                "orientation": self.orientation,
                "reconstruction_error": self.reconstruction_error,
                "coeffs_real": self.coeffs.real.tolist(), "coeffs_imag": self.coeffs.imag.tolist(),
                "meta": self.meta}

    @classmethod
    def from_json(cls, d: dict) -> SpectralSurface:
        c = np.asarray(d["coeffs_real"], float) + 1j * np.asarray(d["coeffs_imag"], float)
        return cls(d["topology"], c, tuple(d["bandlimit"]), tuple(d["grid_shape"]),
                   tuple(d.get("center", (0.0, 0.0, 0.0))), d.get("orientation", "inward"),
                   float(d.get("reconstruction_error", 0.0)), dict(d.get("meta", {})))


def spectral_nodes(topology: str, grid_shape):
    """Fitting nodes: periodic grid for tori, equispaced u by Gauss-Legendre v for spheres
    (the same nodes as the quadrature grid of that resolution)."""
    n_u, n_v = grid_shape
    u = 2 * math.pi * np.arange(n_u) / n_u
    if topology == "torus_like":
        v = 2 * math.pi * np.arange(n_v) / n_v
    else:
        x, _ = np.polynomial.legendre.leggauss(n_v)
        v = math.pi * (x + 1) / 2
    return np.meshgrid(u, v, indexing="ij")


def filter_weights(topology, bandlimit, grid_shape, enabled: bool = True) -> np.ndarray:
    """Exponential filter exp(-a eta^36), eta = |k| / grid Nyquist, with
    exp(-a) = 1e-36 at the Nyquist mode."""
    ku = np.abs(_kvec(bandlimit[0])) / (grid_shape[0] / 2)
    if topology == "torus_like":
        kv = np.abs(_kvec(bandlimit[1])) / (grid_shape[1] / 2)
    else:
        kv = np.arange(bandlimit[1] + 1) / grid_shape[1]
    if not enabled:
        return np.ones((ku.size, kv.size))
    a = -math.log(FILTER_FLOOR)
    return np.exp(-a * ku[:, None] ** FILTER_ORDER) * np.exp(-a * kv[None, :] ** FILTER_ORDER)


def fit_nodal(topology, values, bandlimit, grid_shape, chop: float = CHOP_TOL):
    """Coefficients from nodal samples.

    Coefficients below ``chop`` times the largest one are set to zero:
    rounding noise in high modes is otherwise amplified by fourth
    derivatives (and, on spheres, by the pole singularity of the chart).
    """
    n_u, n_v = grid_shape
    mu, mv = bandlimit
    iu = _kvec(mu) % n_u
    if topology == "torus_like":
        spec = np.fft.fft2(values, axes=(-2, -1)) / (n_u * n_v)
        coeffs = spec[:, iu][:, :, _kvec(mv) % n_v]
    else:
        fu = np.fft.fft(values[0], axis=0)[iu] / n_u          # (Ku, n_v)
        _, vv = spectral_nodes(topology, grid_shape)
        vand = cheb.chebvander(_to_x(vv[0]), mv)                # (n_v, J)
        sol, *_ = np.linalg.lstsq(vand, fu.T, rcond=None)        # (J, Ku)
        coeffs = sol.T
    coeffs = np.where(np.abs(coeffs) < chop * np.max(np.abs(coeffs)), 0.0, coeffs)
    return coeffs


def _reconstruct_error(surf: SpectralSurface, values) -> float:
    return float(np.max(np.abs(surf.nodal_values() - values)))


def project_to_spectral(surface: ClosedSurface, bandlimit, grid_shape=None,
                        center=(0.0, 0.0, 0.0), tol: float = ALIAS_TOL) -> SpectralSurface:
    """Band-limited fit of a closed surface at nodal samples.

    Raises :class:`AliasingError` when the reconstruction error at the
    nodes exceeds ``tol``.
    """
    mu, mv = (int(b) for b in bandlimit)
    if grid_shape is None:
        grid_shape = (max(4 * mu, 32), max(4 * mv, 32))
    n_u, n_v = grid_shape
    if 2 * mu >= n_u or (surface.topology == "torus_like" and 2 * mv >= n_v) or mv >= n_v:
        raise ValueError(f"bandlimit {bandlimit} exceeds the Nyquist limit of grid {grid_shape}")
    uu, vv = spectral_nodes(surface.topology, grid_shape)
    pos = np.moveaxis(surface.position(uu, vv), -1, 0)
    if surface.topology == "torus_like":
        values = pos
    else:
        rel = pos - np.asarray(center, float)[:, None, None]
        r = np.sqrt(np.sum(rel ** 2, axis=0))
        dirs = np.stack([np.sin(vv) * np.cos(uu), np.sin(vv) * np.sin(uu), np.cos(vv)])
        if np.max(np.abs(rel / r - dirs)) > 1e-9:
            raise ValueError("sphere-like spectral surfaces must be radial graphs in their chart")
        values = r[None]
    coeffs = fit_nodal(surface.topology, values, (mu, mv), grid_shape)
    out = SpectralSurface(surface.topology, coeffs, (mu, mv), tuple(grid_shape), tuple(center),
                          surface.orientation)
    err = _reconstruct_error(out, values)
    out.reconstruction_error = err
    if err > tol:
        raise AliasingError(f"reconstruction error {err:.2e} at bandlimit {(mu, mv)} exceeds "
                            f"{tol:.0e}; raise the bandlimit")
    return out
