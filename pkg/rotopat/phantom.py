"""Smooth absorption phantoms supported in omega."""
from __future__ import annotations
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import GeometryError
from .geometry import DomainMask, ScalarField
from .optics import AbsorptionMap


class Bump(BaseModel):
    """Cosine-taper bump: flat at `amplitude` out to radius - taper, zero beyond radius."""
    model_config = ConfigDict(frozen=True, extra="forbid")
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = Field(default=0.15, gt=0)
    amplitude: float = Field(default=0.5, ge=0)
    taper: float = Field(default=0.1, gt=0)

    @model_validator(mode="after")
    def _taper_fits(self):
        if self.taper > self.radius:
            raise ValueError(f"taper {self.taper} exceeds radius {self.radius}")
        return self

    def profile(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        r = np.hypot(X - self.center[0], Y - self.center[1])
        inner = self.radius - self.taper
        u = np.clip((r - inner) / self.taper, 0.0, 1.0)
        return self.amplitude * 0.5 * (1.0 + np.cos(np.pi * u))

    @property
    def max_slope(self) -> float:
        return self.amplitude * np.pi / (2.0 * self.taper)


class PhantomSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")
    bumps: tuple[Bump, ...] = ()
    plateau: float = Field(default=0.0, ge=0)
    plateau_taper: float = Field(default=0.05, gt=0)

    def scaled(self, t: float) -> "PhantomSpec":
        return PhantomSpec(
            bumps=tuple(b.model_copy(update={"amplitude": b.amplitude * t}) for b in self.bumps),
            plateau=self.plateau * t, plateau_taper=self.plateau_taper)


@dataclass
class Phantom:
    sigma: AbsorptionMap
    w1inf: float
    max_slope: float


def _plateau_bump(spec: PhantomSpec, mask: DomainMask) -> Bump:
    return Bump(center=mask.omega_center, radius=mask.omega_radius,
                amplitude=spec.plateau, taper=min(spec.plateau_taper, mask.omega_radius))


def generate_phantom(spec: PhantomSpec, mask: DomainMask) -> Phantom:
    grid = mask.grid
    X, Y = grid.mesh()
    cx, cy = mask.omega_center
    bumps = list(spec.bumps)
    if spec.plateau > 0:
        bumps.append(_plateau_bump(spec, mask))
    values = np.zeros(grid.shape)
    for b in bumps:
        reach = np.hypot(b.center[0] - cx, b.center[1] - cy) + b.radius
        if reach > mask.omega_radius * (1 + 1e-12):
            raise GeometryError(f"bump at {b.center} with radius {b.radius} escapes omega")
        values += b.profile(X, Y)
    values = np.where(mask.inside_omega, values, 0.0)
    sigma = AbsorptionMap(ScalarField(grid, values), mask)
    slope = max((b.max_slope for b in bumps), default=0.0)
    return Phantom(sigma, sigma.w1inf(), slope)


def random_phantom_spec(rng: np.random.Generator, mask: DomainMask, n_bumps: int = 2,
                        max_amplitude: float = 0.3, radius: tuple[float, float] = (0.08, 0.15),
                        taper_fraction: float = 0.6) -> PhantomSpec:
    """Bumps with uniformly drawn centres, radii and amplitudes, each fully inside omega."""
    bumps = []
    cx, cy = mask.omega_center
    for _ in range(n_bumps):
        r = float(rng.uniform(*radius))
        room = mask.omega_radius - r
        if room < 0:
            raise GeometryError("omega too small for the requested bump radius")
        dist = room * np.sqrt(rng.uniform())
        ang = rng.uniform(0, 2 * np.pi)
        bumps.append(Bump(center=(cx + dist * np.cos(ang), cy + dist * np.sin(ang)), radius=r,
                          amplitude=float(rng.uniform(0.2, 1.0) * max_amplitude),
                          taper=taper_fraction * r))
    return PhantomSpec(bumps=tuple(bumps))
