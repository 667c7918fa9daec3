"""Analytic first variations against finite differences.

Every analytic variation formula in the library is paired with a
Richardson-extrapolated central difference along X + t f N.  This script
prints a few of those pairs and shows why the curvature term of the
eigenvalue variation carries the sign it does.
"""

import math

import numpy as np

from csl import catalog
from csl import quadrature as quad
from csl import variation as var
from csl.ambient import factor_from_expr

torus = catalog.torus()
factor = factor_from_expr("2*ln(1+0.2*x)")
f = "sin(u)*cos(v)"
rng = np.random.default_rng(1)
uv = rng.uniform(0, 2 * math.pi, (8, 2))

# %% Principal curvatures
rep = var.eigenvalue_check(torus, factor, f, uv, 1)
print("delta lambda_1, analytic:", np.round(rep.analytic, 8))
print("delta lambda_1, fin. diff:", np.round(rep.fd, 8))
print(f"discrepancy {rep.discrepancy:.1e}, verdict {rep.verdict}")
# The curvature term is the sectional curvature of span(e_i, N).  Written
# with the arguments of R~ in the other order it flips sign, and then the
# comparison fails:
print("same formula with R~(N, e_i)N:", f"{rep.extra['literal_curvature_term_discrepancy']:.1e}")

# %% Area and the Willmore energy
grid = quad.make_grid(torus, 64)
zero = catalog.zero_factor()
rep = var.area_variation_check(torus, zero, "0.5+0.2*cos(v)", grid)
print(f"\nd/dt area along f = 0.5 + 0.2 cos v: analytic {rep.analytic:.10f}, fd {rep.fd:.10f}")
v = var.random_variation(rng)
rep = var.willmore_functional_check(torus, zero, v, grid)
print(f"d/dt integral of H^2 along f = {v.description}")
print(f"  integral of f W: {rep.analytic:.10f}, fd {rep.fd:.10f}")

# %% Gauss-Bonnet does not move
rep = var.gauss_bonnet_variation(torus, factor, v, grid)
print(f"\nd/dt integral of K: {rep.fd:.1e}")

# %% Gauss curvature: the stated coefficient and the chain-rule one
rep = var.gauss_curvature_check(torus, catalog.make_factor("azimuthal"), f, uv)
print(f"\ndelta K with the 1/8 coefficient: discrepancy {rep.discrepancy:.2e}")
print(f"delta K with the 1/2 coefficient: discrepancy {rep.extra['alt_coefficient_discrepancy']:.2e}")
