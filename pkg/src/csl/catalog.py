"""Named surfaces and conformal factors with parameter schemas."""

from __future__ import annotations

import math

import numpy as np

from .ambient import ConformalFactor, factor_from_expr, harmonic_factor_from_potential
from .expr import parse_field
from .surface import ClosedSurface, ExprImmersion

TWO_PI = 2 * math.pi


def _f(x: float) -> str:
    return repr(float(x))


def _immersion(*texts: str) -> ExprImmersion:
    return ExprImmersion(tuple(parse_field(t) for t in texts))


def sphere(r: float = 1.0, center=(0.0, 0.0, 0.0), orientation: str = "inward") -> ClosedSurface:
    cx, cy, cz = (_f(c) for c in center)
    imm = _immersion(f"{cx}+{_f(r)}*sin(v)*cos(u)", f"{cy}+{_f(r)}*sin(v)*sin(u)",
                     f"{cz}+{_f(r)}*cos(v)")
    return ClosedSurface("sphere_like", imm, ((0.0, TWO_PI), (0.0, math.pi)), orientation,
                         "sphere", {"r": r, "center": list(center)})


def ellipsoid(a: float = 1.0, b: float = 1.0, c: float = 1.3, orientation: str = "inward") -> ClosedSurface:
    imm = _immersion(f"{_f(a)}*sin(v)*cos(u)", f"{_f(b)}*sin(v)*sin(u)", f"{_f(c)}*cos(v)")
    return ClosedSurface("sphere_like", imm, ((0.0, TWO_PI), (0.0, math.pi)), orientation,
                         "ellipsoid", {"a": a, "b": b, "c": c})


def torus(R: float = 2.0, r: float = 0.5, orientation: str = "inward") -> ClosedSurface:
    imm = _immersion(f"({_f(R)}+{_f(r)}*cos(v))*cos(u)", f"({_f(R)}+{_f(r)}*cos(v))*sin(u)",
                     f"{_f(r)}*sin(v)")
    return ClosedSurface("torus_like", imm, ((0.0, TWO_PI), (0.0, TWO_PI)), orientation,
                         "torus", {"R": R, "r": r})


def clifford_torus(r: float = 1.0, orientation: str = "inward") -> ClosedSurface:
    """Torus with radius ratio R/r = sqrt(2), the Willmore minimiser."""
    s = torus(math.sqrt(2.0) * r, r, orientation)
    return ClosedSurface(s.topology, s.immersion, s.domain, orientation, "clifford_torus", {"r": r})


def perturbed_torus(R: float = math.sqrt(2.0), r: float = 1.0, eps: float = 0.03,
                    mode: str = "cos(2*u)*cos(v)", orientation: str = "inward") -> ClosedSurface:
    """Torus whose tube radius is r + eps * mode(u, v) (a normal perturbation)."""
    rho = f"({_f(r)}+{_f(eps)}*({mode}))"
    imm = _immersion(f"({_f(R)}+{rho}*cos(v))*cos(u)", f"({_f(R)}+{rho}*cos(v))*sin(u)",
                     f"{rho}*sin(v)")
    return ClosedSurface("torus_like", imm, ((0.0, TWO_PI), (0.0, TWO_PI)), orientation,
                         "perturbed_torus", {"R": R, "r": r, "eps": eps, "mode": mode})


def perturbed_sphere(r: float = 1.0, eps: float = 0.05, mode: str = "sin(v)^2*cos(2*u)",
                     orientation: str = "inward") -> ClosedSurface:
    """Radial graph r (1 + eps * mode(u, v)) over the unit sphere."""
    rho = f"{_f(r)}*(1+{_f(eps)}*({mode}))"
    imm = _immersion(f"{rho}*sin(v)*cos(u)", f"{rho}*sin(v)*sin(u)", f"{rho}*cos(v)")
    return ClosedSurface("sphere_like", imm, ((0.0, TWO_PI), (0.0, math.pi)), orientation,
                         "perturbed_sphere", {"r": r, "eps": eps, "mode": mode})


def custom(x: str, y: str, z: str, topology: str = "sphere_like", orientation: str = "inward") -> ClosedSurface:
    dom = ((0.0, TWO_PI), (0.0, math.pi if topology == "sphere_like" else TWO_PI))
    return ClosedSurface(topology, _immersion(x, y, z), dom, orientation, "custom",
                         {"x": x, "y": y, "z": z, "topology": topology})


SURFACES = {
    "sphere": (sphere, {"r": "float > 0", "center": "[x, y, z]"}),
    "ellipsoid": (ellipsoid, {"a": "float > 0", "b": "float > 0", "c": "float > 0"}),
    "torus": (torus, {"R": "float > r", "r": "float > 0"}),
    "clifford_torus": (clifford_torus, {"r": "float > 0"}),
    "perturbed_sphere": (perturbed_sphere, {"r": "float > 0", "eps": "float", "mode": "expr(u, v)"}),
    "perturbed_torus": (perturbed_torus, {"R": "float", "r": "float", "eps": "float", "mode": "expr(u, v)"}),
    "custom": (custom, {"x": "expr(u, v)", "y": "expr(u, v)", "z": "expr(u, v)",
                        "topology": "sphere_like | torus_like"}),
}


def zero_factor() -> ConformalFactor:
    return factor_from_expr("0", harmonic_intent=True, name="zero")


def linear_harmonic(a: float = 0.3, axis: str = "x") -> ConformalFactor:
    """sigma = 2 ln(1 + a * axis); valid where 1 + a * axis > 0."""
    return harmonic_factor_from_potential(f"1+{_f(a)}*{axis}", name=f"linear_harmonic[{a}]",
                                          validity_note=f"requires 1+{a}*{axis} > 0")


def point_source(center=(3.0, 0.0, 0.0), q: float = 1.0) -> ConformalFactor:
    """sigma = 2 ln(1 + q / |x - center|); singular at the centre."""
    cx, cy, cz = (_f(c) for c in center)
    h = f"1+{_f(q)}/sqrt((x-{cx})^2+(y-{cy})^2+(z-{cz})^2)"
    return harmonic_factor_from_potential(h, name="point_source",
                                          validity_note=f"undefined at {list(center)}")


def azimuthal(amp: float = 0.4) -> ConformalFactor:
    """sigma = amp * cos(theta), theta the azimuth about the z axis.

    grad sigma is azimuthal, hence tangent to every surface of revolution
    about the z axis.  Singular on the z axis.
    """
    return factor_from_expr(f"{_f(amp)}*x/sqrt(x^2+y^2)", name=f"azimuthal[{amp}]",
                            validity_note="undefined on the z axis")


FACTORS = {
    "zero": (zero_factor, {}),
    "expr": (None, {"sigma": "expr(x, y, z)", "harmonic_intent": "bool"}),
    "harmonic_potential": (None, {"h": "expr(x, y, z), Euclidean-harmonic and positive"}),
    "linear_harmonic": (linear_harmonic, {"a": "float", "axis": "x | y | z"}),
    "point_source": (point_source, {"center": "[x, y, z]", "q": "float > 0"}),
    "azimuthal": (azimuthal, {"amp": "float"}),
}


def make_surface(spec) -> ClosedSurface:
    """Surface from a spec dict (``{"kind": "torus", "R": 2}``) or a bare name."""
    if isinstance(spec, ClosedSurface):
        return spec
    spec = {"kind": spec} if isinstance(spec, str) else dict(spec)
    kind = spec.pop("kind", spec.pop("name", None))
    if kind not in SURFACES:
        raise KeyError(f"unknown surface {kind!r}; known: {sorted(SURFACES)}")
    return SURFACES[kind][0](**spec)


def make_factor(spec) -> ConformalFactor:
    if isinstance(spec, ConformalFactor):
        return spec
    spec = {"kind": spec} if isinstance(spec, str) else dict(spec)
    kind = spec.pop("kind", None)
    if kind == "expr":
        return factor_from_expr(spec["sigma"], bool(spec.get("harmonic_intent", False)),
                                name=spec.get("name", "expr"),
                                validity_note=spec.get("validity_note", ""))
    if kind == "harmonic_potential":
        return harmonic_factor_from_potential(spec["h"], name=spec.get("name", ""))
    if kind not in FACTORS or FACTORS[kind][0] is None:
        raise KeyError(f"unknown factor {kind!r}; known: {sorted(FACTORS)}")
    return FACTORS[kind][0](**spec)


def catalog_list() -> dict:
    return {
        "surfaces": {k: v[1] for k, v in SURFACES.items()},
        "factors": {k: v[1] for k, v in FACTORS.items()},
    }


def random_points_off_axis(rng: np.random.Generator, n: int, radius: float = 1.5) -> np.ndarray:
    """Random points in a ball, kept away from the z axis and the point source."""
    pts = rng.uniform(-radius, radius, size=(n, 3))
    rho = np.hypot(pts[:, 0], pts[:, 1])
    pts[rho < 0.2, 0] += 0.5
    return pts
