"""Five-point Laplacian on the nodes of a disk with unequal arms at the circle.

Boundary arms are folded into the diagonal through a ghost value on the
circle (the symmetric form of the Shortley-Weller correction), so the
operator on unknown nodes stays symmetric and -L + diag(sigma) is an
M-matrix for sigma >= 0.

Nodes whose shortest arm is below ``min_arm * h`` (and nodes lying on the
circle itself) are "snapped": they carry the boundary value at their own
polar angle and enter their neighbours' rows as full-length arms.
"""
from __future__ import annotations
import threading
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import GeometryError
from .geometry import ON_CIRCLE_RTOL, TWO_PI, BoundaryParametrization, Grid

DIFFUSION_MIN_ARM = 1e-3
WAVE_MIN_ARM = 0.5

_DIRECTIONS = ((1, 0), (-1, 0), (0, 1), (0, -1))


def periodic_interpolation(angles: np.ndarray, boundary: BoundaryParametrization) -> sp.csr_matrix:
    """Sparse rows mapping boundary samples to values at arbitrary polar angles."""
    n = boundary.n_boundary_points
    pos = np.mod(angles, TWO_PI) / TWO_PI * n
    lo = np.floor(pos).astype(np.int64)
    frac = pos - lo
    lo = np.mod(lo, n)
    hi = np.mod(lo + 1, n)
    rows = np.arange(len(angles))
    data = np.concatenate([1.0 - frac, frac])
    return sp.csr_matrix((data, (np.concatenate([rows, rows]), np.concatenate([lo, hi]))),
                         shape=(len(angles), n))


@dataclass(eq=False)
class CircleStencil:
    grid: Grid
    radius: float
    center: tuple[float, float]
    min_arm: float
    unknown: np.ndarray        # flat node indices
    snapped: np.ndarray        # flat node indices
    snapped_angles: np.ndarray
    laplacian: sp.csr_matrix   # unknown x unknown
    coupling: sp.csr_matrix    # unknown x arm points
    arm_angles: np.ndarray
    _ops: dict = field(default_factory=dict, repr=False)
    _lu: object = field(default=None, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def n_unknowns(self) -> int:
        return len(self.unknown)

    def boundary_operators(
            self, boundary: BoundaryParametrization) -> tuple[sp.csr_matrix, sp.csr_matrix]:
        """(B, S): B maps boundary samples to right-hand sides, S to snapped-node values."""
        ops = self._ops.get(boundary)
        if ops is None:
            B = (self.coupling @ periodic_interpolation(self.arm_angles, boundary)).tocsr()
            S = periodic_interpolation(self.snapped_angles, boundary)
            ops = self._ops.setdefault(boundary, (B, S))
        return ops

    def factor(self):
        """Cached SuperLU factor of -L."""
        with self._lock:
            if self._lu is None:
                self._lu = spla.splu((-self.laplacian).tocsc())
            return self._lu

    def scatter(self, unknown_values: np.ndarray,
                snapped_values: np.ndarray | None = None) -> np.ndarray:
        out = np.zeros(self.grid.node_count)
        out[self.unknown] = unknown_values
        if snapped_values is not None and len(self.snapped):
            out[self.snapped] = snapped_values
        return out.reshape(self.grid.shape)


@lru_cache(maxsize=32)
def circle_stencil(grid: Grid, radius: float, center: tuple[float, float] = (0.0, 0.0),
                   min_arm: float = DIFFUSION_MIN_ARM) -> CircleStencil:
    if radius <= 0:
        raise GeometryError("stencil radius must be positive")
    h = grid.h
    X, Y = grid.mesh()
    dx = X - center[0]
    dy = Y - center[1]
    d2 = dx ** 2 + dy ** 2
    r2 = radius ** 2
    interior = d2 < r2 * (1 - ON_CIRCLE_RTOL)
    on_circle = (d2 <= r2 * (1 + ON_CIRCLE_RTOL)) & ~interior
    edges = (interior[0, :], interior[-1, :], interior[:, 0], interior[:, -1])
    if any(e.any() for e in edges):
        raise GeometryError("disk touches the grid frame")

    # arm length (in units of h) towards each neighbour; 1 for interior neighbours
    arms = []
    for di, dj in _DIRECTIONS:
        nb_interior = np.roll(interior, shift=(-di, -dj), axis=(0, 1))
        proj = dx * di + dy * dj
        disc = np.maximum(proj ** 2 - (d2 - r2), 0.0)
        theta = np.clip((-proj + np.sqrt(disc)) / h, 0.0, 1.0)
        nb_on = np.roll(on_circle, shift=(-di, -dj), axis=(0, 1))
        arms.append(np.where(nb_interior | nb_on, 1.0, theta))
    shortest = np.minimum.reduce(arms)
    snapped_mask = on_circle | (interior & (shortest < min_arm))
    unknown_mask = interior & ~snapped_mask
    if not unknown_mask.any():
        raise GeometryError(f"disk of radius {radius:.4g} has no interior nodes at h={h:.4g}")

    n_nodes = grid.node_count
    flat = np.arange(n_nodes).reshape(grid.shape)
    unknown = flat[unknown_mask]
    snapped = flat[snapped_mask]
    unk_id = np.full(n_nodes, -1, dtype=np.int64)
    unk_id[unknown] = np.arange(len(unknown))
    angle = np.arctan2(dy, dx)

    inv_h2 = 1.0 / h ** 2
    diag = np.zeros(len(unknown))
    rows, cols, vals = [], [], []
    arm_rows, arm_vals, arm_angles = [], [], []
    for (di, dj), theta in zip(_DIRECTIONS, arms):
        nb = np.roll(flat, shift=(-di, -dj), axis=(0, 1))[unknown_mask]
        th = theta[unknown_mask]
        me = unk_id[unknown]
        nb_unknown = unk_id[nb] >= 0
        nb_snapped = snapped_mask.ravel()[nb]
        # interior neighbour
        rows.append(me[nb_unknown])
        cols.append(unk_id[nb[nb_unknown]])
        vals.append(np.full(nb_unknown.sum(), inv_h2))
        diag -= np.where(nb_unknown | nb_snapped, inv_h2, 0.0)
        # snapped neighbour: full arm ending at a boundary-valued node
        arm_rows.append(me[nb_snapped])
        arm_vals.append(np.full(nb_snapped.sum(), inv_h2))
        arm_angles.append(angle.ravel()[nb[nb_snapped]])
        # exterior neighbour: arm cut at the circle
        cut = ~nb_unknown & ~nb_snapped
        w = inv_h2 / th[cut]
        diag[cut] -= w
        ux = dx.ravel()[unknown[cut]] + di * th[cut] * h
        uy = dy.ravel()[unknown[cut]] + dj * th[cut] * h
        arm_rows.append(me[cut])
        arm_vals.append(w)
        arm_angles.append(np.arctan2(uy, ux))

    n_unk = len(unknown)
    rows.append(np.arange(n_unk))
    cols.append(np.arange(n_unk))
    vals.append(diag)
    L = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n_unk, n_unk))
    arm_rows = np.concatenate(arm_rows)
    arm_vals = np.concatenate(arm_vals)
    arm_angles = np.concatenate(arm_angles)
    C = sp.csr_matrix((arm_vals, (arm_rows, np.arange(len(arm_rows)))),
                      shape=(n_unk, len(arm_rows)))
    return CircleStencil(
        grid=grid,
        radius=float(radius),
        center=(float(center[0]), float(center[1])),
        min_arm=float(min_arm),
        unknown=unknown,
        snapped=snapped,
        snapped_angles=angle.ravel()[snapped],
        laplacian=L,
        coupling=C,
        arm_angles=arm_angles,
    )


def ball_stencil(grid: Grid, min_arm: float = DIFFUSION_MIN_ARM) -> CircleStencil:
    return circle_stencil(grid, grid.rho, (0.0, 0.0), min_arm)
