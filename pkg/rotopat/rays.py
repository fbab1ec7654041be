"""Hamiltonian rays for H = c^2 |xi|^2 / 2, exit times and visibility checks.

Covectors are normalised to |xi| = 1 / c(x), so the flow parameter is travel
time and the exit times are distances in the metric c^-2 g.
"""
from __future__ import annotations
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .acoustics import SoundSpeedMap
from .errors import ConfigError
from .geometry import AcquisitionSetup, BoundaryParametrization, DomainMask, ScalarField, in_plateau
from .log import get_logger

log = get_logger("rotopat.rays")

BISECTION_STEPS = 40
CHUNK = 20000


class _Medium:
    """c^2 and its gradient at arbitrary points; constant speed skips the spline."""

    def __init__(self, c: SoundSpeedMap):
        self.rho = c.grid.rho
        self.c_max = c.c_max
        self.c0 = c.c0
        self.constant = c.is_constant
        self.c2_value = float(c.field.values.flat[0]) ** 2
        if not self.constant:
            x = c.grid.coords
            self.spline = RectBivariateSpline(x, x, c.field.values ** 2, kx=3, ky=3)

    def c2(self, x: np.ndarray) -> np.ndarray:
        if self.constant:
            return np.full(len(x), self.c2_value)
        return self.spline.ev(x[:, 0], x[:, 1])

    def grad_c2(self, x: np.ndarray) -> np.ndarray:
        if self.constant:
            return np.zeros_like(x)
        return np.stack([self.spline.ev(x[:, 0], x[:, 1], dx=1),
                         self.spline.ev(x[:, 0], x[:, 1], dy=1)], axis=1)

    def rhs(self, x: np.ndarray, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        dx = self.c2(x)[:, None] * p
        if self.constant:
            return dx, np.zeros_like(p)
        dp = -0.5 * np.sum(p * p, axis=1)[:, None] * self.grad_c2(x)
        return dx, dp

    def rk4(self, x: np.ndarray, p: np.ndarray, dt) -> tuple[np.ndarray, np.ndarray]:
        dt = np.asarray(dt, dtype=float).reshape(-1, 1) if np.ndim(dt) else dt
        k1x, k1p = self.rhs(x, p)
        k2x, k2p = self.rhs(x + 0.5 * dt * k1x, p + 0.5 * dt * k1p)
        k3x, k3p = self.rhs(x + 0.5 * dt * k2x, p + 0.5 * dt * k2p)
        k4x, k4p = self.rhs(x + dt * k3x, p + dt * k3p)
        return (x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x),
                p + dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p))


def medium_for(c: SoundSpeedMap) -> _Medium:
    cached = getattr(c, "_ray_medium", None)
    if cached is None:
        cached = _Medium(c)
        c._ray_medium = cached
    return cached


def _default_step(c: SoundSpeedMap) -> float:
    return c.grid.h / (2.0 * c.c_max)


def _integrate(med: _Medium, x0: np.ndarray, p0: np.ndarray, step: float, cap: float,
               record: bool = False):
    """Advance all rays until they leave the closed ball; negative step runs backwards."""
    n = len(x0)
    rho2 = med.rho ** 2
    x, p = x0.copy(), p0.copy()
    t = np.zeros(n)
    tau = np.full(n, np.inf)
    exit_pt = np.full((n, 2), np.nan)
    active = np.arange(n)
    dt = abs(step)
    path = [x0[0].copy()] if record else None
    while active.size:
        xa, pa = x[active], p[active]
        xn, pn = med.rk4(xa, pa, np.sign(step) * dt)
        out = np.sum(xn * xn, axis=1) > rho2
        if out.any():
            sel = active[out]
            lo = np.zeros(sel.size)
            hi = np.ones(sel.size)
            xs, ps = xa[out], pa[out]
            for _ in range(BISECTION_STEPS):
                mid = 0.5 * (lo + hi)
                xm, _ = med.rk4(xs, ps, np.sign(step) * dt * mid)
                beyond = np.sum(xm * xm, axis=1) > rho2
                hi = np.where(beyond, mid, hi)
                lo = np.where(beyond, lo, mid)
            frac = 0.5 * (lo + hi)
            xe, _ = med.rk4(xs, ps, np.sign(step) * dt * frac)
            tau[sel] = t[sel] + dt * frac
            exit_pt[sel] = xe
            if record:
                path.append(xe[0].copy())
        keep = ~out
        active_next = active[keep]
        x[active_next], p[active_next] = xn[keep], pn[keep]
        t[active_next] += dt
        if record and keep.any():
            path.append(xn[keep][0].copy())
        stuck = t[active_next] >= cap
        active = active_next[~stuck]
    trapped = ~np.isfinite(tau)
    tau[trapped] = cap
    return tau, exit_pt, trapped, (np.array(path) if record else None)


@dataclass
class Ray:
    start: np.ndarray
    direction: np.ndarray
    path: np.ndarray            # from gamma(-tau_minus) to gamma(tau_plus)
    tau_plus: float
    tau_minus: float
    exit_point_plus: np.ndarray
    exit_point_minus: np.ndarray
    trapped: bool = False


def trace_ray(x, xi, c: SoundSpeedMap, step: float | None = None) -> Ray:
    x = np.asarray(x, dtype=float).reshape(1, 2)
    xi = np.asarray(xi, dtype=float).reshape(1, 2)
    if abs(np.linalg.norm(xi) - 1.0) > 1e-9:
        raise ConfigError("direction must be a unit covector")
    if np.sum(x * x) > c.grid.rho ** 2 * (1 + 1e-12):
        raise ConfigError("ray must start in the closed ball")
    med = medium_for(c)
    step = step or _default_step(c)
    cap = 10.0 * c.grid.rho / c.c0
    p = xi / np.sqrt(med.c2(x))[:, None]
    tp, ep, trp, path_p = _integrate(med, x, p, step, cap, record=True)
    tm, em, trm, path_m = _integrate(med, x, p, -step, cap, record=True)
    path = np.concatenate([path_m[::-1], path_p[1:]], axis=0)
    return Ray(x[0], xi[0], path, float(tp[0]), float(tm[0]), ep[0], em[0], bool(trp[0] or trm[0]))


@dataclass
class RayFan:
    """Exit data for every omega node and an equispaced direction fan."""
    nodes: np.ndarray           # flat node indices
    points: np.ndarray          # (N, 2)
    directions: np.ndarray      # (K, 2), K even so -xi_k = xi_{k + K/2}
    tau_plus: np.ndarray        # (N, K)
    exit_plus: np.ndarray       # (N, K) polar angle of the forward exit
    trapped_plus: np.ndarray    # (N, K)

    def _opposite(self, a: np.ndarray) -> np.ndarray:
        return np.roll(a, -self.directions.shape[0] // 2, axis=1)

    @property
    def tau_minus(self) -> np.ndarray:
        return self._opposite(self.tau_plus)

    @property
    def exit_minus(self) -> np.ndarray:
        return self._opposite(self.exit_plus)

    @property
    def trapped_minus(self) -> np.ndarray:
        return self._opposite(self.trapped_plus)


def direction_fan(n_dirs: int) -> np.ndarray:
    if n_dirs < 8 or n_dirs % 2:
        raise ConfigError(f"n_dirs must be an even integer >= 8, got {n_dirs}")
    a = 2 * np.pi * np.arange(n_dirs) / n_dirs
    return np.stack([np.cos(a), np.sin(a)], axis=1)


def trace_fan(mask: DomainMask, c: SoundSpeedMap, n_dirs: int = 32, step: float | None = None,
              nodes: np.ndarray | None = None) -> RayFan:
    grid = mask.grid
    if nodes is None:
        nodes = np.flatnonzero(mask.inside_omega.ravel())
    X, Y = grid.mesh()
    pts = np.stack([X.ravel()[nodes], Y.ravel()[nodes]], axis=1)
    dirs = direction_fan(n_dirs)
    med = medium_for(c)
    step = step or _default_step(c)
    cap = 10.0 * grid.rho / c.c0
    N, K = len(nodes), len(dirs)
    tau = np.empty(N * K)
    ang = np.empty(N * K)
    trapped = np.empty(N * K, dtype=bool)
    x_all = np.repeat(pts, K, axis=0)
    d_all = np.tile(dirs, (N, 1))
    t0 = time.perf_counter()
    for s in range(0, N * K, CHUNK):
        xs = x_all[s:s + CHUNK]
        ps = d_all[s:s + CHUNK] / np.sqrt(med.c2(xs))[:, None]
        t, e, tr, _ = _integrate(med, xs, ps, step, cap)
        tau[s:s + CHUNK] = t
        ang[s:s + CHUNK] = np.arctan2(e[:, 1], e[:, 0])
        trapped[s:s + CHUNK] = tr
    log.info("rays.traced", rays=N * K, trapped=int(trapped.sum()),
             seconds=round(time.perf_counter() - t0, 3))
    return RayFan(nodes, pts, dirs, tau.reshape(N, K), ang.reshape(N, K), trapped.reshape(N, K))


def _arc_samples(setup: AcquisitionSetup, j: int, boundary: BoundaryParametrization) -> np.ndarray:
    return boundary.angles[setup.arc(j).contains(boundary.angles)]


def check_uniqueness(setup: AcquisitionSetup, mask: DomainMask, c: SoundSpeedMap,
                     n_shots: int = 256) -> list[bool]:
    """Per rotation j: does every omega node reach some y in Gamma_j with dist(x, y) < s(y)?"""
    grid = mask.grid
    boundary = BoundaryParametrization.for_grid(grid)
    nodes = np.flatnonzero(mask.inside_omega.ravel())
    if nodes.size == 0:
        return [True] * setup.m
    X, Y = grid.mesh()
    pts = np.stack([X.ravel()[nodes], Y.ravel()[nodes]], axis=1)
    verdicts = []
    if c.is_constant:
        speed = float(c.field.values.flat[0])
        for j in range(setup.m):
            ang = _arc_samples(setup, j, boundary)
            if ang.size == 0:
                verdicts.append(False)
                continue
            ys = grid.rho * np.stack([np.cos(ang), np.sin(ang)], axis=1)
            s = setup.duration_at(ang)
            ok = np.zeros(len(pts), dtype=bool)
            for lo in range(0, len(pts), 2048):
                d = np.linalg.norm(pts[lo:lo + 2048, None, :] - ys[None, :, :], axis=2) / speed
                ok[lo:lo + 2048] = np.any(d < s[None, :], axis=1)
            verdicts.append(bool(ok.all()))
        return verdicts
    fan = trace_fan(mask, c, n_dirs=n_shots, nodes=nodes)
    for j in range(setup.m):
        arc = setup.arc(j)
        reach = arc.contains(fan.exit_plus) & (fan.tau_plus < setup.duration_at(fan.exit_plus)) \
            & ~fan.trapped_plus
        verdicts.append(bool(np.all(reach.any(axis=1))))
    return verdicts


@dataclass
class VisibilityReport:
    uniqueness_ok: list[bool]
    stability_ok: bool
    uncovered_samples: list[tuple[float, float, float, float]]
    coverage_fraction: float
    n_samples: int
    coverage: ScalarField | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "uniqueness_ok": self.uniqueness_ok,
            "stability_ok": self.stability_ok,
            "coverage_fraction": self.coverage_fraction,
            "n_samples": self.n_samples,
            "n_uncovered": len(self.uncovered_samples),
            "uncovered_samples": [list(s) for s in self.uncovered_samples[:1000]],
        }


def covered_directions(setup: AcquisitionSetup, fan: RayFan) -> np.ndarray:
    """(N, K) booleans: the + or - exit lands in the plateau of some rotation's cutoff."""
    ok = np.zeros(fan.tau_plus.shape, dtype=bool)
    plus_ok = ~fan.trapped_plus
    minus_ok = ~fan.trapped_minus
    for i in range(setup.m):
        ok |= plus_ok & in_plateau(setup, i, fan.tau_plus, fan.exit_plus)
        ok |= minus_ok & in_plateau(setup, i, fan.tau_minus, fan.exit_minus)
    return ok


def check_stability(setup: AcquisitionSetup, mask: DomainMask, c: SoundSpeedMap, n_dirs: int = 32,
                    fan: RayFan | None = None) -> VisibilityReport:
    fan = fan or trace_fan(mask, c, n_dirs)
    grid = mask.grid
    covered = covered_directions(setup, fan)
    n_samples = covered.size
    bad_n, bad_k = np.nonzero(~covered)
    uncovered = [(float(fan.points[a, 0]), float(fan.points[a, 1]),
                  float(fan.directions[b, 0]), float(fan.directions[b, 1]))
                 for a, b in zip(bad_n, bad_k)]
    image = np.zeros(grid.node_count)
    if fan.nodes.size:
        image[fan.nodes] = covered.mean(axis=1)
    return VisibilityReport(
        uniqueness_ok=check_uniqueness(setup, mask, c),
        stability_ok=not uncovered,
        uncovered_samples=uncovered,
        coverage_fraction=float(covered.mean()) if n_samples else 1.0,
        n_samples=int(n_samples),
        coverage=ScalarField(grid, image.reshape(grid.shape)),
    )
