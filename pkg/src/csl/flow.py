"""Willmore-type gradient descent driven by the Euler-Lagrange operator

    W = Delta H + H (|w#|^2 - l1 l2 + 2 H^2 - K).

The first variation of int H^2 dOmega along X + t f N is int f W dOmega
(checked against finite differences in the variation module), so any speed
f with int f W dOmega < 0 decreases the energy.  Two speeds are offered:

* ``"explicit"``: f = -W, plain explicit Euler with dt0 = 1e-3 L^4 / max|W|.
  Stable only for dt ~ h^4, i.e. impractically small steps at useful
  resolutions.  This is the only speed available on sphere-like surfaces.
* ``"sobolev"`` (default, torus-like only): f = -(I + l^4 Delta^2)^-1 W,
  with Delta the Laplace-Beltrami operator of the current surface and l
  the length scale sqrt(area / A0), A0 the Clifford torus area.  The
  operator is self-adjoint and positive in L2(dOmega), so this is still a
  descent direction; it is solved by conjugate gradients preconditioned
  with its constant-metric version (an FFT division).  It matches the
  fourth-order principal part of W, so O(l^4) steps are stable.

By default successive Sobolev speeds are combined into Polak-Ribiere
conjugate directions, and each step length comes from a parabolic line
search.  Every candidate step is re-projected onto the band limit,
filtered, and accepted only if the energy does not increase; otherwise dt
is halved.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field

import numpy as np

from .ambient import ConformalFactor
from .quadrature import evaluate_on_grid, willmore_el
from .spectral import SpectralSurface, _kvec, filter_weights, fit_nodal, spectral_nodes


@dataclass
class FlowConfig:
    max_steps: int = 500
    dt0: float | None = None
    tol: float = 1e-4
    speed: str = "sobolev"
    filter: bool = True
    max_halvings: int = 20
    growth: float = 1.5
    dt_max: float | None = None
    threads: int | None = None
    sobolev_length: float = 1.0
    line_search: bool = True
    conjugate: bool = True


@dataclass
class FlowRecord:
    step: int
    dt: float
    energy: float
    w_sup: float
    w_l2: float
    area: float
    total_K: float
    halvings: int = 0
    tangency_max: float = 0.0


@dataclass
class FlowTrace:
    records: list = field(default_factory=list)
    termination: str = ""
    final: SpectralSurface | None = None

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])

    def to_csv(self, path) -> None:
        cols = list(FlowRecord.__dataclass_fields__)
        _atomic_write(path, lambda fh: _write_csv(fh, cols, self.records))

    def summary(self) -> dict:
        first, last = self.records[0], self.records[-1]
        return {"termination": self.termination, "steps": last.step,
                "energy_initial": first.energy, "energy_final": last.energy,
                "w_l2_initial": first.w_l2, "w_l2_final": last.w_l2,
                "total_K_drift": float(np.max(np.abs([r.total_K - first.total_K for r in self.records]))),
                "monotone": bool(np.all(np.diff(self.energies) <= 0.0)),
                "tangency_max_final": last.tangency_max}


def _write_csv(fh, cols, records):
    w = csv.writer(fh)
    w.writerow(cols)
    for r in records:
        w.writerow([getattr(r, c) for c in cols])


def _atomic_write(path, writer) -> None:
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_checkpoint(state: SpectralSurface, path, extra: dict | None = None) -> None:
    doc = {"surface": state.to_json(), **(extra or {})}
    _atomic_write(path, lambda fh: json.dump(doc, fh))


def load_checkpoint(path) -> tuple[SpectralSurface, dict]:
    with open(path) as fh:
        doc = json.load(fh)
    return SpectralSurface.from_json(doc.pop("surface")), doc


# -- evaluation on the flow grid ----------------------------------------

@dataclass
class _Eval:
    energy: float
    area: float
    total_K: float
    W: np.ndarray | None = None
    normal: np.ndarray | None = None
    density: np.ndarray | None = None
    metric: np.ndarray | None = None
    metric_mean: tuple | None = None
    length_scale: float = 1.0
    tangency_max: float = 0.0
    w_l2: float = 0.0

    def w_sup(self):
        return float(np.max(np.abs(self.W)))


def _weights(state: SpectralSurface) -> np.ndarray:
    n_u, n_v = state.grid_shape
    if state.topology == "torus_like":
        return np.full((n_u, n_v), (2 * math.pi) ** 2 / (n_u * n_v))
    _, w = np.polynomial.legendre.leggauss(n_v)
    return np.outer(np.full(n_u, 2 * math.pi / n_u), w * math.pi / 2)


def evaluate_state(state: SpectralSurface, factor: ConformalFactor, full: bool = True,
                   threads=None) -> _Eval:
    """Energy, area and int K at the flow grid; with ``full`` also W and N."""
    surf = state.as_surface()
    uu, vv = state.nodes()
    nodes = np.stack([uu, vv], -1)
    w = _weights(state)
    if full:
        H, dens, K, W, N, gm, tang = evaluate_on_grid(
            surf, factor, nodes,
            lambda g: (g.mean_curvature, g.area_density, g.gauss_intrinsic, willmore_el(g),
                       g.normal, g.induced_metric, g.tangency_residual), 4, threads)
    else:
        H, dens, K = evaluate_on_grid(surf, factor, nodes,
                                      lambda g: (g.mean_curvature, g.area_density,
                                                 g.gauss_intrinsic), 3, threads)
    wd = w * dens
    out = _Eval(float(np.sum(wd * H * H)), float(np.sum(wd)), float(np.sum(wd * K)))
    if full:
        out.W, out.normal, out.density = W, N, dens
        out.metric = gm
        out.metric_mean = (float(np.mean(gm[..., 0, 0])), float(np.mean(gm[..., 1, 1])))
        out.length_scale = math.sqrt(out.area / (4 * math.pi ** 2 * math.sqrt(2)))
        out.tangency_max = float(np.max(tang))
        out.w_l2 = float(math.sqrt(np.sum(wd * W * W)))
    return out


def _spectral_d(field_, axis: int) -> np.ndarray:
    """Exact derivative of a periodic nodal field (Nyquist mode dropped)."""
    n = field_.shape[axis]
    k = np.fft.fftfreq(n, 1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    shape = [1, 1]
    shape[axis] = n
    return np.real(np.fft.ifft(np.fft.fft(field_, axis=axis) * (1j * k).reshape(shape), axis=axis))


class _Laplacian:
    """Laplace-Beltrami on the periodic chart grid, from nodal metric values."""

    def __init__(self, metric: np.ndarray, density: np.ndarray):
        det = metric[..., 0, 0] * metric[..., 1, 1] - metric[..., 0, 1] ** 2
        self.s = density
        self.gi = (metric[..., 1, 1] / det, -metric[..., 0, 1] / det, metric[..., 0, 0] / det)

    def __call__(self, f):
        fu, fv = _spectral_d(f, 0), _spectral_d(f, 1)
        g11, g12, g22 = self.gi
        return (_spectral_d(self.s * (g11 * fu + g12 * fv), 0)
                + _spectral_d(self.s * (g12 * fu + g22 * fv), 1)) / self.s


def _flat_inverse(ev: _Eval, ell4: float, field_: np.ndarray) -> np.ndarray:
    n_u, n_v = field_.shape
    ku = np.fft.fftfreq(n_u, 1.0 / n_u)
    kv = np.fft.fftfreq(n_v, 1.0 / n_v)
    g11, g22 = ev.metric_mean
    k2 = ku[:, None] ** 2 / g11 + kv[None, :] ** 2 / g22
    return np.real(np.fft.ifft2(np.fft.fft2(field_) / (1.0 + ell4 * k2 ** 2)))


def _sobolev(state: SpectralSurface, ev: _Eval, rhs: np.ndarray, ell4: float,
             rtol: float = 1e-10, maxiter: int = 500) -> np.ndarray:
    """Solve (I + l^4 Delta^2) s = rhs by preconditioned conjugate gradients.

    The operator is self-adjoint in L2(dOmega), so CG runs in the inner
    product weighted by the area density; the constant-metric version of
    the same operator, inverted by FFT, is the preconditioner.
    """
    lap = _Laplacian(ev.metric, ev.density)
    w = ev.density

    def op(x):
        return x + ell4 * lap(lap(x))

    def dot(a, b):
        return float(np.sum(w * a * b))

    x = np.zeros_like(rhs)
    r = rhs.copy()
    z = _flat_inverse(ev, ell4, r)
    p = z.copy()
    rz = dot(r, z)
    norm0 = math.sqrt(dot(rhs, rhs)) or 1.0
    for _ in range(maxiter):
        ap = op(p)
        alpha = rz / dot(p, ap)
        x += alpha * p
        r -= alpha * ap
        if math.sqrt(dot(r, r)) < rtol * norm0:
            break
        z = _flat_inverse(ev, ell4, r)
        rz_new = dot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x


def descent_speed(state: SpectralSurface, ev: _Eval, speed: str,
                  length: float = 1.0) -> np.ndarray:
    """Normal speed: -W, or -(I + l^4 Delta^2)^{-1} W with l = length * sqrt(area / A0),
    A0 the Clifford torus area."""
    if speed == "explicit":
        return -ev.W
    if speed == "sobolev":
        if state.topology != "torus_like":
            raise ValueError("the Sobolev speed needs a doubly periodic chart; use 'explicit'")
        return -_sobolev(state, ev, ev.W, (length * ev.length_scale) ** 4)
    raise ValueError(f"unknown flow speed {speed!r}")


def displaced(state: SpectralSurface, factor: ConformalFactor, ev: _Eval, speed: np.ndarray,
              dt: float, filter_on: bool = True) -> SpectralSurface:
    """Move nodes by dt * speed * N, refit to the band limit and filter."""
    vals = state.nodal_values()
    disp = dt * speed[..., None] * ev.normal                      # (n_u, n_v, 3)
    if state.topology == "torus_like":
        new = vals + np.moveaxis(disp, -1, 0)
    else:
        uu, vv = state.nodes()
        rhat = np.stack([np.sin(vv) * np.cos(uu), np.sin(vv) * np.sin(uu), np.cos(vv)], -1)
        new = np.sqrt(np.sum((vals[0][..., None] * rhat + disp) ** 2, -1))[None]
    coeffs = fit_nodal(state.topology, new, state.bandlimit, state.grid_shape)
    coeffs = coeffs * filter_weights(state.topology, state.bandlimit, state.grid_shape, filter_on)
    return state.with_coeffs(coeffs)


def default_dt0(state: SpectralSurface, ev: _Eval, speed: str, length: float = 1.0) -> float:
    """1e-3 L^4 / max|W| for the explicit speed; for the Sobolev speed the
    preconditioned operator acts on short waves as 1 / (2 l^4), and dt0 = l^4."""
    if speed == "explicit":
        L = state.as_surface().scale
        return 1e-3 * L ** 4 / max(ev.w_sup(), 1e-300)
    return (length * ev.length_scale) ** 4


def _energy(state, factor, threads):
    try:
        return evaluate_state(state, factor, full=False, threads=threads).energy
    except (ValueError, FloatingPointError):
        return math.inf


def flow_step(state: SpectralSurface, factor: ConformalFactor, dt: float,
              config: FlowConfig | None = None, ev: _Eval | None = None,
              direction: np.ndarray | None = None):
    """One step along ``direction`` (default: the configured descent speed).

    Returns (new_state, dt_used, halvings, dt_next).  With ``line_search``
    a second trial at the minimiser of the parabola through E(0), the
    slope int f W dOmega and E(dt) is taken first; in every case the step is
    accepted only if the energy does not increase, halving dt otherwise.
    ``new_state`` is None after ``max_halvings`` failed halvings (stall).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    config = config or FlowConfig()
    ev = ev or evaluate_state(state, factor, threads=config.threads)
    f = descent_speed(state, ev, config.speed, config.sobolev_length) if direction is None \
        else direction
    e0 = ev.energy
    if config.line_search:
        slope = float(np.sum(_weights(state) * ev.density * f * ev.W))
        cand = displaced(state, factor, ev, f, dt, config.filter)
        e1 = _energy(cand, factor, config.threads)
        curv = 2.0 * (e1 - e0 - slope * dt) / dt ** 2
        if slope < 0 and math.isfinite(e1) and curv > 0:
            t_star = min(-slope / curv, 4.0 * dt)
            cand2 = displaced(state, factor, ev, f, t_star, config.filter)
            e2 = _energy(cand2, factor, config.threads)
            best = min(((e1, dt, cand), (e2, t_star, cand2)), key=lambda c: c[0])
            if best[0] <= e0:
                return best[2], best[1], 0, t_star
            dt = min(dt, t_star)
        elif e1 <= e0:
            return cand, dt, 0, dt * config.growth
        dt *= 0.5
    for halvings in range(config.max_halvings + 1):
        cand = displaced(state, factor, ev, f, dt, config.filter)
        if _energy(cand, factor, config.threads) <= e0:
            return cand, dt, halvings, dt
        dt *= 0.5
    return None, dt, config.max_halvings, dt


def _record(step, dt, ev: _Eval, halvings=0) -> FlowRecord:
    return FlowRecord(step, dt, ev.energy, ev.w_sup(), ev.w_l2, ev.area, ev.total_K, halvings,
                      ev.tangency_max)


def run_flow(initial: SpectralSurface, factor: ConformalFactor, config: FlowConfig | None = None,
             trace_path=None, checkpoint_path=None, start_step: int = 0,
             checkpoint_extra: dict | None = None) -> FlowTrace:
    """Iterate flow_step until L2(W) < tol, max_steps, or stall.

    With ``config.conjugate`` the direction is the preconditioned
    Polak-Ribiere combination d = -s + beta d_prev (s the Sobolev speed),
    restarted as -s whenever it fails to be a descent direction.
    """
    config = config or FlowConfig()
    state = initial
    ev = evaluate_state(state, factor, threads=config.threads)
    trace = FlowTrace()
    trace.records.append(_record(start_step, 0.0, ev))
    dt = config.dt0 or default_dt0(state, ev, config.speed, config.sobolev_length)
    dt_max = config.dt_max or 4 * dt
    step = start_step
    prev = None                      # (speed s, gradient W, direction d)
    while True:
        if ev.w_l2 < config.tol:
            trace.termination = "converged"
            break
        if step - start_step >= config.max_steps:
            trace.termination = "max_steps"
            break
        s = -descent_speed(state, ev, config.speed, config.sobolev_length)
        d = -s
        if config.conjugate and prev is not None:
            wts = _weights(state) * ev.density
            beta = max(0.0, float(np.sum(wts * s * (ev.W - prev[1]))
                                  / np.sum(wts * prev[0] * prev[1])))
            d = -s + beta * prev[2]
            if np.sum(wts * d * ev.W) >= 0:
                d = -s
        new, used, halvings, dt_next = flow_step(state, factor, dt, config, ev, d)
        if new is None:
            trace.termination = "stall"
            break
        prev = (s, ev.W, d)
        step += 1
        state = new
        ev = evaluate_state(state, factor, threads=config.threads)
        trace.records.append(_record(step, used, ev, halvings))
        if config.line_search:
            dt = min(max(dt_next, 1e-3 * dt), dt_max)
        else:
            dt = min(used * config.growth, dt_max) if halvings == 0 else used
        if checkpoint_path is not None:
            save_checkpoint(state, checkpoint_path, {**(checkpoint_extra or {}), "step": step,
                                                     "dt": dt, "config": asdict(config)})
    trace.final = state
    if trace_path is not None:
        trace.to_csv(trace_path)
    if checkpoint_path is not None:
        save_checkpoint(state, checkpoint_path, {**(checkpoint_extra or {}), "step": step,
                                                 "dt": dt, "config": asdict(config),
                                                 "termination": trace.termination})
    return trace
