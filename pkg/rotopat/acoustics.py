"""Acoustic forward propagation in a causal frame, boundary traces and time reversal."""
from __future__ import annotations
import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import CFLError, ConfigError, ShapeMismatchError
from .geometry import (BoundaryFunction, BoundaryParametrization, Grid, ScalarField,
                       inside_closed_disk)
from .log import get_logger
from .optics import harmonic_extension
from .stencil import WAVE_MIN_ARM, ball_stencil

log = get_logger("rotopat.acoustics")

MAX_CFL = 0.5
DEFAULT_SPONGE_STRENGTH = 20.0
SPONGE_WIDTH = 0.25      # damping band, in units of rho


@dataclass
class SoundSpeedMap:
    field: ScalarField
    c0: float

    def __post_init__(self):
        c = self.field.values
        if not self.c0 > 0:
            raise ConfigError(f"c0 must be positive, got {self.c0}")
        if c.min() < self.c0 * (1 - 1e-12):
            raise ConfigError(f"sound speed {c.min():.4g} drops below c0={self.c0:.4g}")
        outside = ~inside_closed_disk(self.field.grid, self.field.grid.rho)
        if np.any(np.abs(c[outside] - 1.0) > 1e-4):
            raise ConfigError("sound speed must equal 1 outside the ball")

    @classmethod
    def constant(cls, grid: Grid, value: float = 1.0) -> "SoundSpeedMap":
        return cls(ScalarField.constant(grid, value), value)

    @classmethod
    def gaussian(cls, grid: Grid, amplitude: float = 0.2, width: float = 0.1,
                 center=(0.0, 0.0)) -> "SoundSpeedMap":
        X, Y = grid.mesh()
        c = 1.0 + amplitude * np.exp(-((X - center[0]) ** 2 + (Y - center[1]) ** 2) / width)
        return cls(ScalarField(grid, c), float(min(1.0, c.min())))

    @property
    def grid(self) -> Grid:
        return self.field.grid

    @property
    def c_max(self) -> float:
        return float(self.field.values.max())

    @property
    def is_constant(self) -> bool:
        v = self.field.values
        return bool(v.max() - v.min() <= 1e-12)


@dataclass
class BoundaryTrace:
    values: np.ndarray   # (n_time_steps + 1, n_boundary_points)
    dt: float
    boundary: BoundaryParametrization

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not self.dt > 0:
            raise ConfigError(f"trace dt must be positive, got {self.dt}")
        if self.values.ndim != 2 or self.values.shape[1] != self.boundary.n_boundary_points:
            raise ShapeMismatchError(f"trace shape {self.values.shape} does not match the boundary")
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("trace contains non-finite values")

    @classmethod
    def zeros_like(cls, other: "BoundaryTrace") -> "BoundaryTrace":
        return cls(np.zeros_like(other.values), other.dt, other.boundary)

    @property
    def n_time_steps(self) -> int:
        return self.values.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.values.shape[0])

    def _check(self, other: "BoundaryTrace") -> None:
        if other.values.shape != self.values.shape or other.dt != self.dt:
            raise ShapeMismatchError("traces sampled differently")

    def __add__(self, other: "BoundaryTrace") -> "BoundaryTrace":
        self._check(other)
        return BoundaryTrace(self.values + other.values, self.dt, self.boundary)

    def __sub__(self, other: "BoundaryTrace") -> "BoundaryTrace":
        self._check(other)
        return BoundaryTrace(self.values - other.values, self.dt, self.boundary)

    def __mul__(self, k: float) -> "BoundaryTrace":
        return BoundaryTrace(self.values * float(k), self.dt, self.boundary)

    __rmul__ = __mul__

    def at_step(self, k: int) -> BoundaryFunction:
        return BoundaryFunction(self.boundary, self.values[k])


@dataclass
class WaveResult:
    trace: BoundaryTrace
    final: tuple[ScalarField, ScalarField]   # v(T), dv/dt(T)
    energy: np.ndarray | None = None


def time_grid(grid: Grid, c: SoundSpeedMap, T: float, cfl: float = MAX_CFL) -> tuple[float, int]:
    required = MAX_CFL * grid.h / c.c_max
    dt = cfl * grid.h / c.c_max
    if cfl > MAX_CFL:
        raise CFLError(dt, required)
    if not T > 0:
        raise ConfigError(f"total time must be positive, got {T}")
    return dt, math.ceil(T / dt - 1e-9)


@dataclass(frozen=True)
class WaveFrame:
    """The base grid embedded in a wider square that emulates free space up to time T.

    Within `reach` (max-norm) the medium is undamped. reach - rho >= c_max T / 2, so
    nothing turned back at or beyond it can return to the ball before T. The band from
    reach to the edge carries the damping ramp.
    """
    base: Grid
    grid: Grid
    pad: int
    reach: float

    @property
    def edge(self) -> float:
        return self.grid.n_cells_per_side * self.grid.h / 2

    def embed(self, values: np.ndarray, mode: str = "constant") -> np.ndarray:
        return np.pad(values, self.pad, mode=mode) if self.pad else np.array(values, dtype=float)

    def restrict(self, values: np.ndarray) -> np.ndarray:
        n = self.base.n_cells_per_side + 1
        return values[self.pad:self.pad + n, self.pad:self.pad + n].copy()


def wave_frame(grid: Grid, c_max: float, T: float) -> WaveFrame:
    h = grid.h
    reach = grid.rho + 0.5 * c_max * T + 4 * h
    edge = reach + max(SPONGE_WIDTH * grid.rho, 8 * h)
    pad = max(0, math.ceil((edge - grid.n_cells_per_side * h / 2) / h - 1e-9))
    n = grid.n_cells_per_side + 2 * pad
    half = n * h / 2
    big = Grid(n, h, (-half, -half), grid.rho, half - grid.rho - h)
    return WaveFrame(grid, big, pad, reach)


def sponge_profile(frame: WaveFrame, c_max: float,
                   strength: float = DEFAULT_SPONGE_STRENGTH) -> np.ndarray:
    """Quadratic damping ramp over the band between frame.reach and the edge of the square."""
    X, Y = frame.grid.mesh()
    width = frame.edge - frame.reach
    ramp = np.clip((np.maximum(np.abs(X), np.abs(Y)) - frame.reach) / width, 0.0, 1.0)
    return strength * c_max / width * ramp ** 2


def trace_operator(grid: Grid, boundary: BoundaryParametrization) -> sp.csr_matrix:
    """Bilinear interpolation of grid nodes onto the boundary samples."""
    pts = boundary.points()
    fx = (pts[:, 0] - grid.coords[0]) / grid.h
    fy = (pts[:, 1] - grid.coords[0]) / grid.h
    i0 = np.floor(fx).astype(np.int64)
    j0 = np.floor(fy).astype(np.int64)
    ax = fx - i0
    ay = fy - j0
    n1 = grid.n_cells_per_side + 1
    rows = np.repeat(np.arange(len(pts)), 4)
    cols = np.stack([i0 * n1 + j0, (i0 + 1) * n1 + j0, i0 * n1 + j0 + 1, (i0 + 1) * n1 + j0 + 1],
                    axis=1)
    w = np.stack([(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay], axis=1)
    return sp.csr_matrix((w.ravel(), (rows, cols.ravel())), shape=(len(pts), grid.node_count))


def _laplacian(v: np.ndarray, h: float, out: np.ndarray) -> np.ndarray:
    out[1:-1, 1:-1] = (v[2:, 1:-1] + v[:-2, 1:-1] + v[1:-1, 2:] + v[1:-1, :-2]
                       - 4.0 * v[1:-1, 1:-1]) / (h * h)
    return out


def discrete_energy(v_new: np.ndarray, v_old: np.ndarray, c: np.ndarray, dt: float,
                    h: float) -> float:
    """Staggered leapfrog energy at t + dt/2; conserved exactly without damping."""
    lap = _laplacian(v_old, h, np.zeros_like(v_old))
    kinetic = np.sum(((v_new - v_old) / dt) ** 2 / c ** 2)
    potential = -np.sum(v_new * lap)
    return float((kinetic + potential) * h * h)


def propagate(H: ScalarField, c: SoundSpeedMap, T: float, cfl: float = MAX_CFL,
              boundary: BoundaryParametrization | None = None,
              sponge_strength: float = DEFAULT_SPONGE_STRENGTH,
              record_energy: bool = False) -> WaveResult:
    grid = H.grid
    if c.grid != grid:
        raise ShapeMismatchError("initial pressure and sound speed on different grids")
    boundary = boundary or BoundaryParametrization.for_grid(grid)
    dt, n_steps = time_grid(grid, c, T, cfl)
    outside = ~inside_closed_disk(grid, grid.rho)
    scale = max(np.abs(H.values).max(), 1e-300)
    if np.abs(H.values[outside]).max(initial=0.0) > 1e-12 * scale:
        raise ConfigError("initial pressure must be supported in the ball")

    trace = np.zeros((n_steps + 1, boundary.n_boundary_points))
    if not np.any(H.values):
        zero = ScalarField.zeros(grid)
        energy = np.zeros(n_steps) if record_energy else None
        return WaveResult(BoundaryTrace(trace, dt, boundary), (zero, zero), energy)

    t0 = time.perf_counter()
    h = grid.h
    frame = wave_frame(grid, c.c_max, T)
    P = trace_operator(frame.grid, boundary)
    speed = frame.embed(c.field.values, mode="edge")
    k = speed ** 2 * dt * dt
    damp = sponge_profile(frame, c.c_max, sponge_strength) * dt / 2
    lap = np.zeros(frame.grid.shape)
    v_prev = frame.embed(np.where(outside, 0.0, H.values))
    v = v_prev + 0.5 * k * _laplacian(v_prev, h, lap)
    trace[0] = P @ v_prev.ravel()
    trace[1] = P @ v.ravel()
    energy = [discrete_energy(v, v_prev, speed, dt, h)] if record_energy else None
    dv_T = (v - v_prev) / dt
    for n in range(1, n_steps + 1):
        v_next = (2.0 * v - (1.0 - damp) * v_prev + k * _laplacian(v, h, lap)) / (1.0 + damp)
        if n < n_steps:
            trace[n + 1] = P @ v_next.ravel()
            if record_energy:
                energy.append(discrete_energy(v_next, v, speed, dt, h))
        else:
            dv_T = (v_next - v_prev) / (2.0 * dt)
        v_prev, v = v, v_next
    v_T = v_prev
    log.info("wave.propagated", steps=n_steps, dt=dt, nodes=frame.grid.node_count, pad=frame.pad,
             seconds=round(time.perf_counter() - t0, 3))
    return WaveResult(BoundaryTrace(trace, dt, boundary),
                      (ScalarField(grid, frame.restrict(v_T)),
                       ScalarField(grid, frame.restrict(dv_T))),
                      np.asarray(energy) if record_energy else None)


def measure(trace: BoundaryTrace, chi: np.ndarray) -> BoundaryTrace:
    chi = np.asarray(chi, dtype=float)
    if chi.shape != trace.values.shape:
        raise ShapeMismatchError(f"cutoff shape {chi.shape} != trace shape {trace.values.shape}")
    return BoundaryTrace(trace.values * chi, trace.dt, trace.boundary)


def back_propagate(trace: BoundaryTrace, c: SoundSpeedMap, T: float) -> ScalarField:
    """Time reversal inside the ball with the trace as Dirichlet data.

    Terminal state is the harmonic extension of the trace at T with zero velocity;
    the returned field is the t = 0 snapshot (zero outside the closed ball).
    """
    grid = c.grid
    required = MAX_CFL * grid.h / c.c_max
    if trace.dt > required * (1 + 1e-12):
        raise CFLError(trace.dt, required)
    n_steps = math.ceil(T / trace.dt - 1e-9)
    if trace.n_time_steps < n_steps:
        raise ShapeMismatchError(
            f"trace ends at t={trace.n_time_steps * trace.dt:.4g}; "
            f"terminal sample at T={T:.4g} missing")
    if not np.any(trace.values[: n_steps + 1]):
        return ScalarField.zeros(grid)

    t0 = time.perf_counter()
    st = ball_stencil(grid, WAVE_MIN_ARM)
    B, S = st.boundary_operators(trace.boundary)
    L = st.laplacian
    k = (c.field.values.ravel()[st.unknown] * trace.dt) ** 2
    data = trace.values

    phi = harmonic_extension(trace.at_step(n_steps), grid, method="direct", min_arm=WAVE_MIN_ARM)
    v_next = phi.values.ravel()[st.unknown]
    v = v_next + 0.5 * k * (L @ v_next + B @ data[n_steps])
    for n in range(n_steps - 1, 0, -1):
        v_prev = 2.0 * v - v_next + k * (L @ v + B @ data[n])
        v_next, v = v, v_prev
    log.info("wave.back_propagated", steps=n_steps, unknowns=st.n_unknowns,
             seconds=round(time.perf_counter() - t0, 3))
    return ScalarField(grid, st.scatter(v, S @ data[0]))


def add_noise(trace: BoundaryTrace, level: float, rng: np.random.Generator) -> BoundaryTrace:
    """Additive Gaussian noise with std = level * max |trace|."""
    amp = np.abs(trace.values).max(initial=0.0)
    return BoundaryTrace(trace.values + level * amp * rng.standard_normal(trace.values.shape),
                         trace.dt, trace.boundary)
