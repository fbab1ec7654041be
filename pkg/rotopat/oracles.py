"""Closed-form and quadrature references for the solvers."""
from __future__ import annotations

import numpy as np
from scipy import integrate, special

from .geometry import AcquisitionSetup, Grid, ScalarField, inside_closed_disk

J0_FIRST_ZERO = float(special.jn_zeros(0, 1)[0])   # 2.404825557695773


def radial_bessel_solution(grid: Grid, sigma: float = 1.0, g: float = 1.0) -> ScalarField:
    """u = g I0(sqrt(sigma) r) / I0(sqrt(sigma) rho): -Lap u + sigma u = 0, u = g on the circle."""
    k = np.sqrt(sigma)
    r = grid.radius()
    values = g * special.i0(k * r) / special.i0(k * grid.rho)
    return ScalarField(grid, np.where(inside_closed_disk(grid, grid.rho), values, 0.0))


def disk_poincare_constant(radius: float) -> float:
    return radius / J0_FIRST_ZERO


def gaussian_source(grid: Grid, center=(0.0, 0.0), width: float = 0.15) -> ScalarField:
    """exp(-|x - center|^2 / width^2), cut to the closed ball."""
    X, Y = grid.mesh()
    v = np.exp(-((X - center[0]) ** 2 + (Y - center[1]) ** 2) / width ** 2)
    return ScalarField(grid, np.where(inside_closed_disk(grid, grid.rho), v, 0.0))


def _poisson_value(t: float, a: float, w: float) -> float:
    if t <= 0:
        return float(np.exp(-a * a / (w * w)))

    def integrand(theta: float) -> float:
        r = t * np.sin(theta)
        z = 2.0 * a * r / (w * w)
        return np.sin(theta) * np.exp(-(a - r) ** 2 / (w * w)) * (
            special.i0e(z) * (1.0 - 2.0 * r * r / (w * w)) + z * special.i1e(z))

    points = [float(np.arcsin(a / t))] if 0 < a < t else None
    val, _ = integrate.quad(integrand, 0.0, np.pi / 2, points=points, limit=200,
                            epsabs=1e-13, epsrel=1e-11)
    return float(val)


def poisson_gaussian_trace(times, a: float, width: float) -> np.ndarray:
    """Free-space 2-D wave (c = 1, zero initial velocity) from a Gaussian of the given width,
    observed at distance `a` from its centre."""
    return np.array([_poisson_value(float(t), a, width) for t in np.atleast_1d(times)])


def chord_exits(x, xi, rho: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Unit-speed straight lines x + t xi: forward/backward exit times and exit points of B_rho."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    b = np.sum(x * xi, axis=1)
    disc = np.sqrt(np.maximum(b * b - np.sum(x * x, axis=1) + rho * rho, 0.0))
    t_plus = -b + disc
    t_minus = b + disc
    return t_plus, t_minus, x + t_plus[:, None] * xi, x - t_minus[:, None] * xi


def line_arc_coverage(setup: AcquisitionSetup, points: np.ndarray, directions: np.ndarray,
                      rho: float, c0: float = 1.0) -> np.ndarray:
    """(N, K) booleans: the straight line through each point along each direction leaves
    the ball inside some rotated plateau (shrunken arc, before s - taper_time) in either sense."""
    N, K = len(points), len(directions)
    x = np.repeat(points, K, axis=0)
    d = np.tile(directions, (N, 1))
    tp, tm, ep, em = chord_exits(x, d, rho)
    out = np.zeros(N * K, dtype=bool)
    for tau, e in ((tp / c0, ep), (tm / c0, em)):
        ang = np.arctan2(e[:, 1], e[:, 0])
        before = tau <= setup.duration_at(ang) - setup.taper_time
        for i in range(setup.m):
            arc = setup.arc(i)
            if arc.full:
                out |= before
                continue
            gap = np.abs(np.mod(ang - arc.center + np.pi, 2 * np.pi) - np.pi)
            out |= before & (gap <= arc.width / 2 - setup.taper_angle)
    return out.reshape(N, K)


def euclidean_uniqueness(setup: AcquisitionSetup, points: np.ndarray, j: int, rho: float,
                         c0: float = 1.0, n_arc: int = 2048) -> bool:
    """Every point within travel time s of some sample of the rotated arc Gamma_j."""
    arc = setup.arc(j)
    if arc.full:
        ang = np.linspace(0, 2 * np.pi, n_arc, endpoint=False)
    else:
        ang = arc.center + np.linspace(-arc.width / 2, arc.width / 2, n_arc)
    ys = rho * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    dist = np.linalg.norm(points[:, None, :] - ys[None, :, :], axis=2) / c0
    return bool(np.all(np.any(dist < setup.duration_at(ang)[None, :], axis=1)))
