"""Verification suites: every identity as a pass/fail check, every theorem
quantity as a report.

A :class:`RunConfig` names the surface/factor cases, grids, tolerances,
sample counts and seed.  :func:`run_suite` evaluates the selected suites
case by case and returns a :class:`SuiteReport`.  Checks whose hypotheses
cannot be certified on the case are emitted with verdict ``report-only``.

The JSON report is deterministic for a fixed config; wall-clock times are
kept in a separate ``timings`` mapping and written to their own file.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import ambient as amb
from . import catalog
from . import quadrature as quad
from . import variation as var
from .flow import _atomic_write
from .surface import codazzi_residual, surface_at

SUITES = ("ambient", "surface", "integrals", "identities", "variations", "theorems")

DEFAULT_TOLERANCES = {
    "curvature_law": 1e-9,
    "harmonicity": 1e-9,
    "gauss_equation": 1e-8,
    "codazzi": 1e-8,
    "gauss_bonnet": 1e-6,
    "identity": 1e-6,
    "variation": 1e-6,
}

DEFAULT_CASES = [
    {"surface": {"kind": "sphere"}, "factor": {"kind": "zero"}},
    {"surface": {"kind": "sphere"}, "factor": {"kind": "linear_harmonic"}},
    {"surface": {"kind": "sphere"}, "factor": {"kind": "point_source"}},
    {"surface": {"kind": "torus"}, "factor": {"kind": "zero"}},
    {"surface": {"kind": "torus"}, "factor": {"kind": "linear_harmonic"}},
    {"surface": {"kind": "torus"}, "factor": {"kind": "point_source"}},
    # the tangent pair: grad sigma is azimuthal, tangent to the torus
    {"surface": {"kind": "torus"}, "factor": {"kind": "azimuthal"}},
]


class ConfigError(ValueError):
    """Schema violation in a run configuration, located by path and line."""

    def __init__(self, path, line, message):
        self.path, self.line, self.message = path, line, message
        super().__init__(f"{path}:{line}: {message}")


@dataclass
class RunConfig:
    cases: list = field(default_factory=lambda: [dict(c) for c in DEFAULT_CASES])
    grid: int = 64
    torus_grid: int = 128
    jet_order: int = 4
    tolerances: dict = field(default_factory=dict)
    suites: list = field(default_factory=lambda: list(SUITES))
    seed: int = 0
    points: int = 200
    fields: int = 2
    nodes: int = 10
    threads: int | None = None
    out_dir: str | None = None

    def tolerance(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    def grid_for(self, surface) -> int:
        return self.torus_grid if surface.topology == "torus_like" else self.grid

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict, path: str = "<config>", text: str | None = None) -> RunConfig:
        known = set(cls.__dataclass_fields__)

        def fail(key, msg):
            line = 0
            if text is not None:
                for i, ln in enumerate(text.splitlines(), 1):
                    if f'"{key}"' in ln:
                        line = i
                        break
            raise ConfigError(path, line, msg)

        if not isinstance(data, dict):
            raise ConfigError(path, 1, "top level must be a JSON object")
        for key in data:
            if key not in known:
                fail(key, f"unknown key {key!r}; known: {sorted(known)}")
        cfg = cls(**data)
        for s in cfg.suites:
            if s not in SUITES:
                fail("suites", f"unknown suite {s!r}; known: {list(SUITES)}")
        for k in cfg.tolerances:
            if k not in DEFAULT_TOLERANCES:
                fail("tolerances", f"unknown tolerance {k!r}; known: {sorted(DEFAULT_TOLERANCES)}")
        for name in ("grid", "torus_grid", "points", "fields", "nodes"):
            if not isinstance(getattr(cfg, name), int) or getattr(cfg, name) < 1:
                fail(name, f"{name} must be a positive integer")
        if not 3 <= cfg.jet_order <= 6:
            fail("jet_order", "jet_order must lie in 3..6")
        for i, case in enumerate(cfg.cases):
            if not isinstance(case, dict) or "surface" not in case or "factor" not in case:
                fail("cases", f"case {i} needs 'surface' and 'factor' entries")
            try:
                catalog.make_surface(case["surface"])
                catalog.make_factor(case["factor"])
            except (KeyError, TypeError, ValueError) as exc:
                fail("cases", f"case {i}: {exc}")
        return cfg


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), exc.lineno, exc.msg) from None
    return RunConfig.from_dict(data, str(path), text)


@dataclass
class Check:
    name: str
    case: str
    value: float
    oracle: float
    discrepancy: float
    tolerance: float | None
    verdict: str
    details: dict = field(default_factory=dict)


@dataclass
class SuiteReport:
    version: str
    config: dict
    checks: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def failed(self) -> list:
        return [c for c in self.checks if c.verdict == "fail"]

    @property
    def exit_code(self) -> int:
        return 1 if self.failed else 0

    def counts(self) -> dict:
        out = {"pass": 0, "fail": 0, "report-only": 0}
        for c in self.checks:
            out[c.verdict] += 1
        return out

    def to_dict(self) -> dict:
        return _plain({"version": self.version, "config": self.config,
                       "summary": self.counts(), "checks": [asdict(c) for c in self.checks]})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _plain(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def write_report(report: SuiteReport, out_dir) -> dict:
    """report.json, checks.csv and timings.json under ``out_dir`` (atomic writes)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"report": out / "report.json", "checks": out / "checks.csv",
             "timings": out / "timings.json"}
    _atomic_write(paths["report"], lambda fh: fh.write(report.to_json() + "\n"))
    cols = ["case", "name", "value", "oracle", "discrepancy", "tolerance", "verdict"]

    def rows(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for c in report.checks:
            w.writerow([_plain(getattr(c, k)) for k in cols])
    _atomic_write(paths["checks"], rows)
    _atomic_write(paths["timings"],
                  lambda fh: fh.write(json.dumps(report.timings, indent=2, sort_keys=True) + "\n"))
    return {k: str(v) for k, v in paths.items()}


# -- the checks ---------------------------------------------------------

def _gate(value, tol, gated=True) -> str:
    if not gated:
        return "report-only"
    return "pass" if value < tol else "fail"


def _residual_check(name, case, value, tol, gated=True, **details) -> Check:
    value = float(value)
    return Check(name, case, value, 0.0, value, tol if gated else None, _gate(value, tol, gated),
                 details)


def _variation_check(name, case, rep: var.VariationReport, tol) -> Check:
    analytic = np.asarray(rep.analytic, float)
    finite = analytic[np.isfinite(analytic)]
    value = float(np.max(np.abs(finite))) if finite.size else math.nan
    fd = np.asarray(rep.fd, float)
    oracle = float(fd) if fd.ndim == 0 else float(np.max(np.abs(fd)))
    verdict = rep.verdict
    if verdict != "report-only":
        verdict = "pass" if rep.discrepancy < tol else "fail"
    return Check(name, case, value, oracle, rep.discrepancy,
                 tol if verdict != "report-only" else None, verdict,
                 {"fd_error_max": float(np.max(rep.fd_error)), "flags": rep.flags,
                  "extra": rep.extra})


def _chart_samples(surface, rng, n):
    (u0, u1), (v0, v1) = surface.domain
    u = rng.uniform(u0, u1, n)
    if surface.topology == "sphere_like":
        v = rng.uniform(v0 + 0.2, v1 - 0.2, n)
    else:
        v = rng.uniform(v0, v1, n)
    return np.stack([u, v], -1)


def _ambient_checks(case, surface, factor, cfg, rng, grid):
    out = []
    pts = catalog.random_points_off_axis(rng, cfg.points)
    direct = amb.curvature_direct(factor, pts)
    law = amb.curvature_via_transform(factor, pts)
    scale = np.maximum(1.0, np.max(np.abs(direct), axis=(-4, -3, -2, -1)))
    rel = np.max(np.abs(law - direct), axis=(-4, -3, -2, -1)) / scale
    out.append(_residual_check("curvature_law", case, np.max(rel), cfg.tolerance("curvature_law"),
                               points=cfg.points))
    nodes = np.asarray(surface.position(grid.nodes[..., 0], grid.nodes[..., 1])).reshape(-1, 3)
    res = np.abs(amb.harmonicity_residual(factor, np.concatenate([nodes, pts])))
    out.append(_residual_check("harmonicity", case, np.max(res), cfg.tolerance("harmonicity"),
                               gated=factor.harmonic_intent,
                               harmonic_intent=factor.harmonic_intent,
                               residual_at_surface_nodes=float(np.max(res[:len(nodes)]))))
    return out


def _surface_checks(case, surface, factor, cfg, rng, grid):
    out = []
    gres, tang = quad.evaluate_on_grid(surface, factor, grid.nodes,
                                       lambda g: (np.abs(g.gauss_residual), g.tangency_residual),
                                       max(cfg.jet_order, 3), cfg.threads)
    out.append(_residual_check("gauss_equation", case, np.max(gres), cfg.tolerance("gauss_equation")))
    uv = _chart_samples(surface, rng, cfg.points)
    geom = surface_at(surface, factor, uv, 3)
    frames = rng.normal(size=(3,) + uv.shape)
    general = codazzi_residual(surface, factor, uv, *frames, form="general", geom=geom)
    tangent = codazzi_residual(surface, factor, uv, *frames, form="tangent", geom=geom)
    is_tangent = bool(np.max(tang) < 1e-10)
    tol = cfg.tolerance("codazzi")
    out.append(_residual_check("codazzi_general", case, np.max(general), tol))
    out.append(_residual_check("codazzi_tangent_form", case, np.max(tangent), tol,
                               gated=is_tangent, tangency_max=float(np.max(tang))))
    return out


def _integral_checks(case, surface, factor, cfg, rng, grid):
    gb = quad.gauss_bonnet_check(surface, factor, grid, threads=cfg.threads)
    oracle = 2 * math.pi * quad.expected_chi(surface)
    return [Check("gauss_bonnet", case, gb.integral, oracle, abs(gb.integral - oracle),
                  cfg.tolerance("gauss_bonnet"),
                  _gate(abs(gb.integral - oracle), cfg.tolerance("gauss_bonnet")),
                  {"quadrature": gb.report.as_dict()})]


def _identity_checks(case, surface, factor, cfg, rng, grid):
    out = []
    tol = cfg.tolerance("identity")
    for k in range(cfg.fields):
        X = var.random_vector_field(rng)
        rep = quad.frame_divergence_identity(surface, factor, X, grid, form="general",
                                             threads=cfg.threads)
        out.append(Check(f"frame_divergence[{k}]", case, rep.general_integral, 0.0, rep.residual,
                         tol, _gate(rep.residual, tol),
                         {"field": list(X), "tangent_form_integral": rep.tangent_integral,
                          "tangency_max": rep.tangency_max}))
        f, g = var.random_ambient_expr(rng), var.random_ambient_expr(rng)
        rep = quad.hessian_symmetry_identity(surface, factor, f, g, grid, form="general",
                                             threads=cfg.threads)
        out.append(Check(f"hessian_symmetry[{k}]", case, rep.general_integral, 0.0, rep.residual,
                         tol, _gate(rep.residual, tol),
                         {"f": f, "g": g, "tangent_form_integral": rep.tangent_integral,
                          "tangency_max": rep.tangency_max}))
    return out


def _variation_checks(case, surface, factor, cfg, rng, grid):
    out = []
    tol = cfg.tolerance("variation")
    uv = _chart_samples(surface, rng, cfg.nodes)
    for k in range(cfg.fields):
        f = var.random_variation(rng)
        tag = f"[{k}]"
        for i in (1, 2):
            out.append(_variation_check(f"delta_lambda{i}{tag}", case,
                                        var.eigenvalue_check(surface, factor, f, uv, i), tol))
        out.append(_variation_check(f"delta_area_element{tag}", case,
                                    var.area_element_check(surface, factor, f, uv), tol))
        out.append(_variation_check(f"delta_metric{tag}", case,
                                    var.metric_check(surface, factor, f, uv), tol))
        out.append(_variation_check(f"delta_K{tag}", case,
                                    var.gauss_curvature_check(surface, factor, f, uv), tol))
        out.append(_variation_check(f"delta_gauss_bonnet{tag}", case,
                                    var.gauss_bonnet_variation(surface, factor, f, grid,
                                                               cfg.threads), tol))
        out.append(_variation_check(f"delta_area{tag}", case,
                                    var.area_variation_check(surface, factor, f, grid,
                                                             cfg.threads), tol))
        for c in out[-7:]:
            c.details["f"] = f.description
    return out


def _theorem_checks(case, surface, factor, cfg, rng, grid):
    out = []
    mi = quad.minimality_integral(surface, factor, grid, threads=cfg.threads)
    out.append(Check("minimality_integral", case, mi.value, 0.0, abs(mi.value), None,
                     "report-only", mi.as_dict()))
    mel, dens = quad.evaluate_on_grid(surface, factor, grid.nodes,
                                      lambda g: (quad.mean_el(g), g.area_density), 3, cfg.threads)
    l2 = math.sqrt(quad.quadrature_sum(grid, mel ** 2, dens))
    out.append(Check("mean_el_residual", case, l2, 0.0, l2, None, "report-only",
                     {"sup": float(np.max(np.abs(mel))), "mean": float(np.mean(mel)),
                      "min": float(np.min(mel)), "max": float(np.max(mel)), "l2": l2}))
    chi = quad.euler_characteristic_estimate(surface, factor, grid, threads=cfg.threads)
    gb = quad.gauss_bonnet_check(surface, factor, grid, threads=cfg.threads)
    out.append(Check("chi_estimate", case, chi.value, gb.chi, abs(chi.value - gb.chi), None,
                     "report-only", {"estimate": chi.as_dict(), "gauss_bonnet_chi": gb.chi}))
    fb = quad.frame_balance_report(surface, factor, grid, threads=cfg.threads)
    if fb["tangency_max"] < 1e-10:
        out.append(Check("frame_balance", case, fb["omega_frame_sup"], 0.0, fb["omega_frame_sup"],
                         None, "report-only", fb))
    tol = cfg.tolerance("variation")
    f = var.random_variation(rng)
    out.append(_variation_check("delta_total_H", case,
                                var.mean_functional_check(surface, factor, f, grid, cfg.threads), tol))
    out.append(_variation_check("delta_willmore", case,
                                var.willmore_functional_check(surface, factor, f, grid,
                                                              cfg.threads), tol))
    for c in out[-2:]:
        c.details["f"] = f.description
    return out


_RUNNERS = {"ambient": _ambient_checks, "surface": _surface_checks,
            "integrals": _integral_checks, "identities": _identity_checks,
            "variations": _variation_checks, "theorems": _theorem_checks}


def case_name(case: dict) -> str:
    def label(spec):
        spec = dict(spec)
        kind = spec.pop("kind", "?")
        if not spec:
            return kind
        return kind + "(" + ",".join(f"{k}={spec[k]}" for k in sorted(spec)) + ")"
    return f"{label(case['surface'])}/{label(case['factor'])}"


def run_suite(config: RunConfig | dict | None = None) -> SuiteReport:
    """Run the selected suites over every case of the config."""
    if config is None:
        config = RunConfig()
    elif isinstance(config, dict):
        config = RunConfig.from_dict(config)
    report = SuiteReport(__version__, config.to_dict())
    t_all = time.perf_counter()
    for idx, case in enumerate(config.cases):
        name = case_name(case)
        surface = catalog.make_surface(case["surface"])
        factor = catalog.make_factor(case["factor"])
        n = int(case.get("grid", config.grid_for(surface)))
        grid = quad.make_grid(surface, n)
        for suite in config.suites:
            # independent stream per (case, suite): selecting suites does not shift samples
            rng = np.random.default_rng([config.seed, idx, SUITES.index(suite)])
            t0 = time.perf_counter()
            report.checks.extend(_RUNNERS[suite](name, surface, factor, config, rng, grid))
            report.timings[f"{name}:{suite}"] = time.perf_counter() - t0
    report.timings["total"] = time.perf_counter() - t_all
    return report
