"""Conformal surface laboratory.

Differential geometry of closed parametric surfaces in conformally flat
spaces g~ = exp(sigma) <,>, computed with truncated Taylor jets: curvature
of the ambient metric, shape operators, integral identities, first
variations checked against finite differences, and a Willmore-type flow.
"""

__version__ = "0.1.0"

from .ambient import (ConformalFactor, ambient_at, curvature_direct, curvature_via_transform,
                      factor_from_expr, harmonic_factor_from_potential, harmonicity_residual)
from .expr import FieldExpr, parse_field
from .jets import TaylorJet
from .surface import ClosedSurface, SurfacePointGeometry, surface_at

__all__ = [
    "__version__", "ConformalFactor", "ambient_at", "curvature_direct", "curvature_via_transform",
    "factor_from_expr", "harmonic_factor_from_potential", "harmonicity_residual", "FieldExpr",
    "parse_field", "TaylorJet", "ClosedSurface", "SurfacePointGeometry", "surface_at",
]
