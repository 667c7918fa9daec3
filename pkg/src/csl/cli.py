"""Command-line entry point: ``csl catalog|check|integrate|vary|flow``.

Surfaces and factors are given by catalog name (``torus``), by name with
parameters (``torus:R=2,r=0.5``) or as a JSON object
(``'{"kind": "torus", "R": 2}'``).  Reports are JSON, traces CSV; every
file is written atomically.  The exit status is 0 unless a gated check
fails (``check``, ``vary``) or the arguments are invalid.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, catalog
from . import flow as fl
from . import quadrature as quad
from . import spectral
from . import suite as st
from . import variation as var
from .flow import _atomic_write

EXIT_FAIL = 1
EXIT_USAGE = 2


def parse_spec(text: str) -> dict:
    """'name', 'name:k=v,k=v' or a JSON object, as a catalog spec dict."""
    text = text.strip()
    if text.startswith("{"):
        return json.loads(text)
    kind, _, rest = text.partition(":")
    spec = {"kind": kind}
    for item in filter(None, rest.split(",")):
        key, _, value = item.partition("=")
        try:
            spec[key] = json.loads(value)
        except json.JSONDecodeError:
            spec[key] = value
    return spec


def resolve_threads(value) -> int:
    if value is not None:
        return max(1, int(value))
    return quad.default_threads()


def _emit(doc: dict, out_dir, name: str) -> None:
    text = json.dumps(st._plain(doc), indent=2, sort_keys=True)
    print(text)
    if out_dir is not None:
        path = Path(out_dir) / name
        _atomic_write(path, lambda fh: fh.write(text + "\n"))


# -- subcommands --------------------------------------------------------

def cmd_catalog(args) -> int:
    _emit(catalog.catalog_list(), args.out_dir, "catalog.json")
    return 0


def cmd_check(args) -> int:
    cfg = st.load_config(args.config) if args.config else st.RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.threads = args.threads
    if args.suites is not None:
        cfg.suites = [s for s in args.suites.split(",") if s]
    cfg = st.RunConfig.from_dict(cfg.to_dict())
    report = st.run_suite(cfg)
    out_dir = args.out_dir or cfg.out_dir
    if out_dir is not None:
        paths = st.write_report(report, out_dir)
        print(f"report written to {paths['report']}")
    counts = report.counts()
    for c in report.failed:
        print(f"FAIL {c.case} {c.name}: discrepancy {c.discrepancy:.3e} > {c.tolerance}")
    print(f"{counts['pass']} pass, {counts['fail']} fail, {counts['report-only']} report-only")
    return report.exit_code


def cmd_integrate(args) -> int:
    surface = catalog.make_surface(parse_spec(args.surface))
    factor = catalog.make_factor(parse_spec(args.factor))
    grid = quad.make_grid(surface, args.grid)
    rep = quad.integrate(surface, factor, args.integrand, grid, threads=args.threads)
    doc = {"surface": args.surface, "factor": args.factor, **rep.as_dict()}
    if args.integrand in ("K", "K_ext"):
        doc["chi"] = rep.value / (2 * math.pi)
    _emit(doc, args.out_dir, f"integral_{args.integrand}.json")
    return 0


def _vary_report(quantity, surface, factor, f, uv, grid, threads):
    if quantity in ("lambda1", "lambda2"):
        return var.eigenvalue_check(surface, factor, f, uv, int(quantity[-1]))
    if quantity == "area_element":
        return var.area_element_check(surface, factor, f, uv)
    if quantity == "metric":
        return var.metric_check(surface, factor, f, uv)
    if quantity == "K":
        return var.gauss_curvature_check(surface, factor, f, uv)
    if quantity == "shape_operator":
        return var.make_report("delta_shape_operator",
                               var.delta_weingarten_analytic(surface, factor, f, uv),
                               var.delta_weingarten_fd_principal(surface, factor, f, uv))
    if quantity == "H":
        dA = var.delta_weingarten_analytic(surface, factor, f, uv)
        fd = var.delta_weingarten_fd_principal(surface, factor, f, uv)
        half = var.FDResult(*(0.5 * np.trace(x, axis1=-2, axis2=-1)
                              for x in (fd.value, fd.error)), fd.steps,
                            0.5 * np.trace(fd.coarse, axis1=-2, axis2=-1),
                            0.5 * np.trace(fd.fine, axis1=-2, axis2=-1))
        return var.make_report("delta_H", 0.5 * np.trace(dA, axis1=-2, axis2=-1), half)
    checks = {"area": var.area_variation_check, "total_H": var.mean_functional_check,
              "willmore": var.willmore_functional_check,
              "gauss_bonnet": var.gauss_bonnet_variation}
    return checks[quantity](surface, factor, f, grid, threads)


def cmd_vary(args) -> int:
    surface = catalog.make_surface(parse_spec(args.surface))
    factor = catalog.make_factor(parse_spec(args.factor))
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    f = var.NormalVariation.of(args.f) if args.f else var.random_variation(rng)
    if surface.topology == "sphere_like":
        uv = np.stack([rng.uniform(0, 2 * math.pi, args.nodes),
                       rng.uniform(0.2, math.pi - 0.2, args.nodes)], -1)
    else:
        uv = rng.uniform(0, 2 * math.pi, (args.nodes, 2))
    grid = quad.make_grid(surface, args.grid)
    rep = _vary_report(args.quantity, surface, factor, f, uv, grid, args.threads)
    doc = {"surface": args.surface, "factor": args.factor, "f": f.description, **rep.as_dict()}
    text = json.dumps(st._plain(doc), indent=2, sort_keys=True)
    print(text)
    target = args.report or (Path(args.out_dir) / f"vary_{args.quantity}.json"
                             if args.out_dir else None)
    if target is not None:
        _atomic_write(target, lambda fh: fh.write(text + "\n"))
    return EXIT_FAIL if rep.verdict == "fail" else 0


def cmd_flow(args) -> int:
    factor_spec = parse_spec(args.factor)
    start_step, dt0 = 0, args.dt0
    if args.initial and os.path.exists(args.initial) and args.initial.endswith(".json"):
        state, meta = fl.load_checkpoint(args.initial)
        start_step = int(meta.get("step", 0))
        factor_spec = meta.get("factor", factor_spec)
        dt0 = dt0 or meta.get("dt")
    else:
        surface = catalog.make_surface(parse_spec(args.initial or args.surface))
        b = args.bandlimit
        state = spectral.project_to_spectral(surface, (b, b), grid_shape=(4 * b, 4 * b))
    factor = catalog.make_factor(factor_spec)
    speed = args.speed or ("sobolev" if state.topology == "torus_like" else "explicit")
    config = fl.FlowConfig(max_steps=args.max_steps, dt0=dt0, tol=args.tol, speed=speed,
                           threads=args.threads, filter=not args.no_filter)
    out = Path(args.out_dir) if args.out_dir else None
    trace_path = args.trace or (out / "trace.csv" if out else None)
    ckpt = args.checkpoint or (out / "checkpoint.json" if out else None)
    trace = fl.run_flow(state, factor, config, trace_path=trace_path, checkpoint_path=ckpt,
                        start_step=start_step, checkpoint_extra={"factor": factor_spec})
    summary = trace.summary()
    _emit(summary, args.out_dir, "flow_summary.json")
    return 0


# -- parser -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    def common_flags(default):
        c = argparse.ArgumentParser(add_help=False)
        c.add_argument("--config", default=default,
                       help="JSON config (run config for 'check'; option defaults for the "
                            "other subcommands)")
        c.add_argument("--seed", type=int, default=default)
        c.add_argument("--threads", type=int, default=default,
                       help="worker threads (default: $CSL_THREADS or 1)")
        c.add_argument("--out-dir", default=default)
        return c

    # global flags are accepted before or after the subcommand
    top, common = common_flags(None), common_flags(argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="csl", description=__doc__.splitlines()[0],
                                parents=[top])
    p.add_argument("--version", action="version", version=f"csl {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("catalog", parents=[common], help="list surfaces and factors")
    s.set_defaults(func=cmd_catalog)

    s = sub.add_parser("check", parents=[common], help="run the verification suites")
    s.add_argument("--suites", default=None,
                   help=f"comma-separated subset of {','.join(st.SUITES)} (empty for none)")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("integrate", parents=[common], help="integrate a named integrand")
    s.add_argument("--surface", default="sphere")
    s.add_argument("--factor", default="zero")
    s.add_argument("--integrand", default="K_ext", choices=sorted(quad.INTEGRANDS))
    s.add_argument("--grid", type=int, default=128)
    s.set_defaults(func=cmd_integrate)

    s = sub.add_parser("vary", parents=[common], help="analytic vs finite-difference variation")
    s.add_argument("--surface", default="torus")
    s.add_argument("--factor", default="zero")
    s.add_argument("--f", default=None, help="normal speed expression (default: random)")
    s.add_argument("--quantity", default="lambda1", choices=var.QUANTITIES)
    s.add_argument("--report", default=None, help="write the JSON report here")
    s.add_argument("--nodes", type=int, default=10)
    s.add_argument("--grid", type=int, default=64)
    s.set_defaults(func=cmd_vary)

    s = sub.add_parser("flow", parents=[common], help="Willmore-type descent flow")
    s.add_argument("--surface", default="perturbed_torus")
    s.add_argument("--initial", default=None,
                   help="surface spec, or a checkpoint .json to resume from")
    s.add_argument("--factor", default="zero")
    s.add_argument("--dt0", type=float, default=None)
    s.add_argument("--tol", type=float, default=1e-4)
    s.add_argument("--max-steps", type=int, default=500)
    s.add_argument("--bandlimit", type=int, default=20)
    s.add_argument("--speed", choices=("sobolev", "explicit"), default=None)
    s.add_argument("--no-filter", action="store_true")
    s.add_argument("--trace", default=None, help="CSV trace path")
    s.add_argument("--checkpoint", default=None, help="JSON checkpoint path")
    s.set_defaults(func=cmd_flow)
    return p


def _apply_config_defaults(parser, args) -> None:
    """For subcommands other than 'check', --config supplies option defaults."""
    if args.command == "check" or not args.config:
        return
    doc = json.loads(Path(args.config).read_text())
    defaults = vars(parser.parse_args([args.command]))
    for key, value in doc.items():
        key = key.replace("-", "_")
        if key not in defaults:
            raise st.ConfigError(args.config, 0, f"unknown option {key!r} for {args.command}")
        if getattr(args, key) == defaults[key]:
            setattr(args, key, value)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_defaults(parser, args)
        args.threads = resolve_threads(args.threads)
        return args.func(args)
    except st.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (KeyError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
