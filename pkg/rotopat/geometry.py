"""Grid, disk masks, boundary sampling, the rotating acquisition frame and its cutoffs."""
from __future__ import annotations
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import ndimage

from .errors import ConfigError, GeometryError, ShapeMismatchError

TWO_PI = 2.0 * np.pi
ON_CIRCLE_RTOL = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform square grid centred on the ball; node (i, j) sits at (coords[i], coords[j])."""
    n_cells_per_side: int
    spacing: float
    origin: tuple[float, float]
    rho: float
    margin: float

    def __post_init__(self):
        if self.n_cells_per_side < 16:
            raise GeometryError(f"n_cells_per_side must be >= 16, got {self.n_cells_per_side}")
        if not self.spacing > 0:
            raise GeometryError(f"grid spacing must be positive, got {self.spacing}")
        if not self.rho > 0 or self.margin < 0:
            raise GeometryError(
                f"need rho > 0 and margin >= 0, got rho={self.rho}, margin={self.margin}")
        half = self.rho + self.margin
        for lo in self.origin:
            hi = lo + self.n_cells_per_side * self.spacing
            if not (lo < -half and hi > half):
                raise GeometryError(f"grid square [{lo:.4g}, {hi:.4g}] does not contain "
                                    f"the disk of radius {half:.4g}")

    @classmethod
    def from_spacing(cls, rho: float, margin: float, spacing: float) -> "Grid":
        n = 2 * math.ceil((rho + margin) / spacing - 1e-9) + 4
        half = n * spacing / 2
        return cls(n, spacing, (-half, -half), rho, margin)

    @classmethod
    def from_cells(cls, rho: float, margin: float, n_cells: int) -> "Grid":
        if n_cells < 16 or n_cells % 2:
            raise GeometryError(f"n_cells must be an even integer >= 16, got {n_cells}")
        spacing = 2.0 * (rho + margin) / (n_cells - 4)
        half = n_cells * spacing / 2
        return cls(n_cells, spacing, (-half, -half), rho, margin)

    @property
    def h(self) -> float:
        return self.spacing

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_cells_per_side + 1, self.n_cells_per_side + 1)

    @property
    def node_count(self) -> int:
        return (self.n_cells_per_side + 1) ** 2

    @cached_property
    def coords(self) -> np.ndarray:
        n = self.n_cells_per_side
        centre = self.origin[0] + n * self.spacing / 2
        return centre + (np.arange(n + 1) - n / 2) * self.spacing

    @cached_property
    def _mesh(self) -> tuple[np.ndarray, np.ndarray]:
        X, Y = np.meshgrid(self.coords, self.coords, indexing="ij")
        X.setflags(write=False)
        Y.setflags(write=False)
        return X, Y

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return self._mesh

    def radius(self) -> np.ndarray:
        X, Y = self._mesh
        return np.hypot(X, Y)


@dataclass
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ShapeMismatchError(
                f"field shape {self.values.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("field contains non-finite values")

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    def _other(self, other) -> np.ndarray | float:
        if isinstance(other, ScalarField):
            if other.grid != self.grid:
                raise ShapeMismatchError("fields live on different grids")
            return other.values
        return float(other)

    def __add__(self, other) -> "ScalarField":
        return ScalarField(self.grid, self.values + self._other(other))

    def __sub__(self, other) -> "ScalarField":
        return ScalarField(self.grid, self.values - self._other(other))

    def __mul__(self, other) -> "ScalarField":
        return ScalarField(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.grid, -self.values)

    def l2(self) -> float:
        return float(np.sqrt(np.sum(self.values ** 2)) * self.grid.h)


@dataclass(frozen=True, eq=False)
class DomainMask:
    grid: Grid
    inside_ball: np.ndarray
    inside_omega: np.ndarray
    omega_radius: float
    omega_center: tuple[float, float]

    @property
    def omega_count(self) -> int:
        return int(self.inside_omega.sum())

    def restrict(self, field: ScalarField) -> ScalarField:
        return ScalarField(field.grid, np.where(self.inside_omega, field.values, 0.0))


def inside_closed_disk(grid: Grid, radius: float, center=(0.0, 0.0)) -> np.ndarray:
    X, Y = grid.mesh()
    d2 = (X - center[0]) ** 2 + (Y - center[1]) ** 2
    return d2 <= radius ** 2 * (1 + ON_CIRCLE_RTOL)


def build_mask(grid: Grid, omega_radius: float, omega_center=(0.0, 0.0)) -> DomainMask:
    cx, cy = float(omega_center[0]), float(omega_center[1])
    if omega_radius < 0:
        raise GeometryError(f"omega radius must be >= 0, got {omega_radius}")
    reach = math.hypot(cx, cy) + omega_radius
    if reach > grid.rho - 2 * grid.h:
        raise GeometryError(
            f"omega disk reaches radius {reach:.4g}; it must stay 2h inside the ball "
            f"(limit {grid.rho - 2 * grid.h:.4g})")
    X, Y = grid.mesh()
    inside_ball = inside_closed_disk(grid, grid.rho)
    inside_omega = (X - cx) ** 2 + (Y - cy) ** 2 < omega_radius ** 2
    inside_ball.setflags(write=False)
    inside_omega.setflags(write=False)
    return DomainMask(grid, inside_ball, inside_omega, float(omega_radius), (cx, cy))


def rotate_field(field: ScalarField, theta: float) -> ScalarField:
    """Bilinear resampling: out(x) = field(R_theta x), rotation about the origin."""
    grid = field.grid
    X, Y = grid.mesh()
    c, s = math.cos(theta), math.sin(theta)
    xr = c * X - s * Y
    yr = s * X + c * Y
    idx = (xr - grid.coords[0]) / grid.h
    idy = (yr - grid.coords[0]) / grid.h
    out = ndimage.map_coordinates(field.values, [idx, idy], order=1, mode="constant", cval=0.0)
    return ScalarField(grid, out)


# boundary of the ball

def angular_distance(alpha, center: float) -> np.ndarray:
    return np.abs(np.mod(np.asarray(alpha, dtype=float) - center + np.pi, TWO_PI) - np.pi)


@dataclass(frozen=True)
class BoundaryParametrization:
    rho: float
    n_boundary_points: int

    def __post_init__(self):
        if self.n_boundary_points < 8:
            raise GeometryError("need at least 8 boundary points")

    @classmethod
    def for_grid(cls, grid: Grid) -> "BoundaryParametrization":
        n = max(16, 2 * round(np.pi * grid.rho / grid.h))
        return cls(grid.rho, n)

    @cached_property
    def angles(self) -> np.ndarray:
        a = TWO_PI * np.arange(self.n_boundary_points) / self.n_boundary_points
        a.setflags(write=False)
        return a

    @property
    def arc_length_step(self) -> float:
        return TWO_PI * self.rho / self.n_boundary_points

    def points(self) -> np.ndarray:
        return self.rho * np.stack([np.cos(self.angles), np.sin(self.angles)], axis=1)


@dataclass
class BoundaryFunction:
    boundary: BoundaryParametrization
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.boundary.n_boundary_points,):
            raise ShapeMismatchError(
                f"boundary values shape {self.values.shape} != "
                f"({self.boundary.n_boundary_points},)")

    @classmethod
    def from_callable(cls, boundary: BoundaryParametrization, f) -> "BoundaryFunction":
        return cls(boundary, np.broadcast_to(f(boundary.angles), boundary.angles.shape).copy())

    @classmethod
    def constant(cls, boundary: BoundaryParametrization, value: float) -> "BoundaryFunction":
        return cls(boundary, np.full(boundary.n_boundary_points, float(value)))

    def evaluate(self, alpha) -> np.ndarray:
        return np.interp(np.mod(alpha, TWO_PI), self.boundary.angles, self.values, period=TWO_PI)


def rotate_boundary_function(f: BoundaryFunction, theta: float) -> BoundaryFunction:
    return BoundaryFunction(f.boundary, f.evaluate(f.boundary.angles + theta))


# acquisition frame

class Arc(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")
    center: float = 0.0
    width: float = Field(default=np.pi / 3, gt=0)

    @property
    def full(self) -> bool:
        return self.width >= TWO_PI

    def contains(self, alpha, shrink: float = 0.0) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=float)
        if self.full:
            return np.ones(alpha.shape, dtype=bool)
        return angular_distance(alpha, self.center) <= self.width / 2 - shrink

    def rotated(self, theta: float) -> "Arc":
        return Arc(center=float(np.mod(self.center + theta, TWO_PI)), width=self.width)


class Illumination(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")
    kind: Literal["bump", "uniform"] = "bump"
    center: float = np.pi
    half_width: float = Field(default=np.pi / 8, gt=0)
    amplitude: float = Field(default=1.0, gt=0)

    def __call__(self, alpha) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=float)
        if self.kind == "uniform":
            return np.full(alpha.shape, self.amplitude)
        d = angular_distance(alpha, self.center)
        bump = 0.5 * (1.0 + np.cos(np.pi * np.minimum(d, self.half_width) / self.half_width))
        return self.amplitude * np.where(d < self.half_width, bump, 0.0)

    def support(self) -> Arc:
        if self.kind == "uniform":
            return Arc(center=0.0, width=TWO_PI)
        return Arc(center=self.center, width=2 * self.half_width)


class AcquisitionSetup(BaseModel):
    """Rotating frame: illumination g and transducer arc turn together by each theta_i."""
    model_config = ConfigDict(frozen=True, extra="forbid")
    illumination: Illumination = Illumination()
    transducer: Arc = Arc()
    rotations: tuple[float, ...] = (0.0,)
    duration: float = Field(default=2.2, ge=0)
    # s(alpha) sampled at 2 pi k / n in the lab frame, periodic linear in between;
    # overrides `duration` when set
    duration_profile: tuple[float, ...] | None = None
    total_time: float = Field(default=2.4, gt=0)
    taper_angle: float = Field(default=np.pi / 48, gt=0)
    taper_time: float = Field(default=0.1, gt=0)

    @model_validator(mode="after")
    def _check(self):
        if not self.rotations:
            raise ValueError("at least one rotation is required")
        if not self.transducer.full and self.taper_angle >= self.transducer.width / 2:
            raise ValueError(
                f"taper_angle {self.taper_angle:.4g} must be smaller than half the arc width "
                f"{self.transducer.width / 2:.4g}")
        if self.duration_profile is not None:
            s = np.asarray(self.duration_profile, dtype=float)
            if s.size < 2 or not np.all(np.isfinite(s)) or s.min() < 0:
                raise ValueError("duration_profile needs >= 2 finite, non-negative samples")
        if self.total_time < self.max_duration:
            raise ValueError(f"total_time {self.total_time} must be >= the longest recording "
                             f"duration {self.max_duration}")
        if self.illumination.kind == "bump" and not self.transducer.full:
            gap = float(angular_distance(self.illumination.center, self.transducer.center))
            if gap < self.illumination.half_width + self.transducer.width / 2:
                raise ValueError("illumination support overlaps the transducer arc")
        return self

    @classmethod
    def default(cls, rho: float = 1.0, c0: float = 1.0, m: int = 8,
                **overrides) -> "AcquisitionSetup":
        base = dict(
            rotations=equispaced_rotations(m),
            duration=2.2 * rho / c0,
            total_time=2.4 * rho / c0,
        )
        base.update(overrides)
        return cls(**base)

    @property
    def m(self) -> int:
        return len(self.rotations)

    def arc(self, i: int) -> Arc:
        return self.transducer.rotated(-self.rotations[i])

    @property
    def max_duration(self) -> float:
        return float(max(self.duration_profile)) if self.duration_profile else self.duration

    @property
    def min_duration(self) -> float:
        return float(min(self.duration_profile)) if self.duration_profile else self.duration

    def duration_at(self, alpha) -> np.ndarray:
        """Recording duration s at boundary angle(s) alpha."""
        if self.duration_profile is None:
            return np.full(np.shape(alpha), self.duration)
        s = np.asarray(self.duration_profile, dtype=float)
        nodes = TWO_PI * np.arange(s.size) / s.size
        return np.interp(np.mod(alpha, TWO_PI), nodes, s, period=TWO_PI)

    def with_duration(self, s, n_samples: int = 360) -> "AcquisitionSetup":
        """Copy with a per-angle duration: a callable of alpha or a sequence of samples."""
        if callable(s):
            alpha = TWO_PI * np.arange(n_samples) / n_samples
            s = np.broadcast_to(np.asarray(s(alpha), dtype=float), alpha.shape)
        profile = tuple(float(v) for v in np.atleast_1d(np.asarray(s, dtype=float)))
        fields = self.model_dump()
        fields["duration_profile"] = profile
        return type(self).model_validate(fields)

    def base_illumination(self, boundary: BoundaryParametrization) -> BoundaryFunction:
        return BoundaryFunction.from_callable(boundary, self.illumination)

    def illumination_for(self, i: int, boundary: BoundaryParametrization) -> BoundaryFunction:
        return rotate_boundary_function(self.base_illumination(boundary), self.rotations[i])


def equispaced_rotations(m: int) -> tuple[float, ...]:
    if m < 1:
        raise ConfigError(f"need at least one rotation, got {m}")
    return tuple(TWO_PI * k / m for k in range(m))


def _taper(u: np.ndarray) -> np.ndarray:
    # u in [0, 1]: 1 -> 0 with zero slope at both ends
    return 0.5 * (1.0 + np.cos(np.pi * np.clip(u, 0.0, 1.0)))


def _check_time_taper(setup: AcquisitionSetup) -> None:
    if setup.taper_time >= setup.min_duration / 2:
        raise ConfigError(
            f"taper_time {setup.taper_time:.4g} must be smaller than half the shortest recording "
            f"duration {setup.min_duration:.4g}")


def cutoff_value(setup: AcquisitionSetup, i: int, t, alpha) -> np.ndarray:
    _check_time_taper(setup)
    arc = setup.arc(i)
    t = np.asarray(t, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if arc.full:
        angular = np.ones(alpha.shape)
    else:
        plateau = arc.width / 2 - setup.taper_angle
        d = angular_distance(alpha, arc.center)
        angular = np.where(d <= plateau, 1.0, _taper((d - plateau) / setup.taper_angle))
    s = setup.duration_at(alpha)
    start = s - setup.taper_time
    temporal = np.where(t <= start, 1.0, _taper((t - start) / setup.taper_time))
    return angular * temporal


def in_plateau(setup: AcquisitionSetup, i: int, t, alpha) -> np.ndarray:
    """True where the cutoff equals one: the shrunken arc before s - taper_time."""
    arc = setup.arc(i)
    inside = arc.contains(alpha, shrink=setup.taper_angle)
    return inside & (np.asarray(t) <= setup.duration_at(alpha) - setup.taper_time)


def build_cutoff(setup: AcquisitionSetup, i: int, boundary: BoundaryParametrization,
                 times: np.ndarray) -> np.ndarray:
    return cutoff_value(setup, i, np.asarray(times)[:, None], boundary.angles[None, :])
