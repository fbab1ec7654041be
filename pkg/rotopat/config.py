"""Experiment configuration: YAML (or a run manifest) validated by pydantic models."""
from __future__ import annotations
import os
from typing import Literal

import numpy as np
import orjson
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .acoustics import DEFAULT_SPONGE_STRENGTH, MAX_CFL, SoundSpeedMap
from .errors import ConfigError
from .geometry import (AcquisitionSetup, Arc, DomainMask, Grid, Illumination, build_mask,
                       equispaced_rotations)
from .phantom import Bump, PhantomSpec, generate_phantom

MODES = ("simulate", "reconstruct", "check-geometry", "analyze-operator", "stability-sweep",
         "selftest")


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class OmegaConfig(_Block):
    radius: float = Field(default=0.35, ge=0)
    center: tuple[float, float] = (0.0, 0.0)


class GeometryConfig(_Block):
    rho: float = Field(default=1.0, gt=0)
    margin: float = Field(default=0.25, gt=0)
    n_cells: int | None = Field(default=256, ge=16)
    spacing: float | None = Field(default=None, gt=0)
    omega: OmegaConfig = OmegaConfig()

    def grid(self) -> Grid:
        if self.spacing is not None:
            return Grid.from_spacing(self.rho, self.margin, self.spacing)
        if self.n_cells is None:
            raise ConfigError("geometry: set n_cells or spacing")
        return Grid.from_cells(self.rho, self.margin, self.n_cells)

    def coarse_grid(self, n_cells: int) -> Grid:
        return Grid.from_cells(self.rho, self.margin, n_cells)

    def mask(self, grid: Grid | None = None) -> DomainMask:
        return build_mask(grid or self.grid(), self.omega.radius, self.omega.center)


class AcquisitionConfig(_Block):
    illumination: Illumination = Illumination()
    transducer: Arc = Arc()
    rotations: int | list[float] = 8
    duration: float | None = Field(default=None, ge=0)      # default 2.2 rho / c0
    duration_profile: list[float] | None = None             # s(alpha) on equispaced angles
    total_time: float | None = Field(default=None, gt=0)    # default 2.4 rho / c0
    taper_angle: float = Field(default=np.pi / 48, gt=0)
    taper_time: float = Field(default=0.1, gt=0)

    def build(self, rho: float, c0: float = 1.0) -> AcquisitionSetup:
        rotations = (equispaced_rotations(self.rotations) if isinstance(self.rotations, int)
                     else tuple(float(t) for t in self.rotations))
        duration = self.duration if self.duration is not None else 2.2 * rho / c0
        profile = tuple(self.duration_profile) if self.duration_profile else None
        longest = max(profile) if profile else duration
        total = self.total_time if self.total_time is not None else max(2.4 * rho / c0, longest)
        return AcquisitionSetup(illumination=self.illumination, transducer=self.transducer,
                                rotations=rotations, duration=duration, total_time=total,
                                duration_profile=profile,
                                taper_angle=self.taper_angle, taper_time=self.taper_time)


class SoundSpeedConfig(_Block):
    kind: Literal["constant", "gaussian"] = "constant"
    value: float = Field(default=1.0, gt=0)
    amplitude: float = 0.2
    width: float = Field(default=0.1, gt=0)
    center: tuple[float, float] = (0.0, 0.0)

    def build(self, grid: Grid) -> SoundSpeedMap:
        if self.kind == "gaussian":
            return SoundSpeedMap.gaussian(grid, self.amplitude, self.width, self.center)
        return SoundSpeedMap.constant(grid, self.value)


class MediumConfig(_Block):
    phantom: PhantomSpec = PhantomSpec(bumps=(Bump(),))
    background: PhantomSpec = PhantomSpec()
    sound_speed: SoundSpeedConfig = SoundSpeedConfig()


class SolverConfig(_Block):
    tol: float = Field(default=1e-10, gt=0)
    cfl: float = Field(default=MAX_CFL, gt=0, le=MAX_CFL)
    sponge_strength: float = Field(default=DEFAULT_SPONGE_STRENGTH, gt=0)
    max_iter: int = Field(default=50, ge=0)
    step: float = Field(default=0.9, gt=0)
    recon_tol: float = Field(default=1e-3, gt=0)
    w_floor: float = Field(default=0.05, gt=0, le=1)
    n_dirs: int = Field(default=32, ge=8)
    noise_level: float = Field(default=0.0, ge=0)


class ExperimentBlock(_Block):
    mode: Literal["simulate", "reconstruct", "check-geometry", "analyze-operator",
                  "stability-sweep", "selftest"] = "simulate"
    seed: int = 0
    output: str = "out"
    threads: int | None = Field(default=None, ge=1)
    data: str | None = None              # reconstruct: directory written by simulate
    pairs: int = Field(default=10, ge=0)
    pair_amplitude: float = Field(default=0.3, gt=0)
    coarse_cells: list[int] = Field(default_factory=lambda: [24, 32])
    measurement_rotation: int = Field(default=0, ge=0)
    domination_samples: int = Field(default=5, ge=1)
    only: list[str] = Field(default_factory=list)   # selftest: subset of checks
    scale: Literal["quick", "full"] = "quick"
    trace_csv: bool = False


class ExperimentConfig(_Block):
    geometry: GeometryConfig = GeometryConfig()
    acquisition: AcquisitionConfig = AcquisitionConfig()
    medium: MediumConfig = MediumConfig()
    solver: SolverConfig = SolverConfig()
    experiment: ExperimentBlock = ExperimentBlock()

    def setup(self) -> AcquisitionSetup:
        c0 = self.medium.sound_speed.value if self.medium.sound_speed.kind == "constant" else 1.0
        try:
            return self.acquisition.build(self.geometry.rho, c0)
        except ValidationError as e:
            raise ConfigError("acquisition: " + _first_error(e)) from e

    def check(self) -> None:
        """Build every derived object once so precondition failures surface before compute."""
        grid = self.geometry.grid()
        mask = self.geometry.mask(grid)
        setup = self.setup()
        if self.experiment.measurement_rotation >= setup.m:
            raise ConfigError("experiment.measurement_rotation: index beyond the rotation set")
        self.medium.sound_speed.build(grid)
        generate_phantom(self.medium.phantom, mask)
        generate_phantom(self.medium.background, mask)


def _first_error(e: ValidationError) -> str:
    err = e.errors()[0]
    loc = ".".join(str(p) for p in err["loc"])
    return f"{loc}: {err['msg']}" if loc else err["msg"]


def parse_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data or {})
    except ValidationError as e:
        raise ConfigError("; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())) from e


def load_config(path: str) -> ExperimentConfig:
    """YAML config, or a manifest.json written by a previous run."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, "rb") as f:
        raw = f.read()
    if path.endswith(".json"):
        doc = orjson.loads(raw)
        doc = doc.get("config", doc)
    else:
        try:
            doc = yaml.safe_load(raw) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_config(doc)


def with_overrides(cfg: ExperimentConfig, **experiment) -> ExperimentConfig:
    """Copy of `cfg` with experiment-block fields replaced (CLI flags)."""
    try:
        block = ExperimentBlock.model_validate(cfg.experiment.model_dump() | experiment)
    except ValidationError as e:
        raise ConfigError("experiment." + _first_error(e)) from e
    return cfg.model_copy(update={"experiment": block})
