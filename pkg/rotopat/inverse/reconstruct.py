"""Symbol-preconditioned fixed-point reconstruction of sigma from rotating data."""
from __future__ import annotations
import time
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel

from ..acoustics import BoundaryTrace, SoundSpeedMap, add_noise
from ..errors import ConfigError, ReconstructionDiverged
from ..geometry import AcquisitionSetup, ScalarField
from ..log import get_logger
from ..norms import h1_norm_field
from ..optics import AbsorptionMap
from ..rays import RayFan, trace_fan
from .operator import MeasurementModel
from .symbol import SymbolWeight, symbol_weight

log = get_logger("rotopat.reconstruct")

DIVERGENCE_PATIENCE = 5


class IterationRecord(BaseModel):
    k: int
    residual: float
    l2_error: float | None = None
    h1_error: float | None = None


@dataclass
class ReconstructionState:
    sigma: AbsorptionMap
    residuals: list[BoundaryTrace]
    back_projection: ScalarField
    k: int
    converged: bool
    history: list[IterationRecord] = field(default_factory=list)

    @property
    def l2_error(self) -> float | None:
        return self.history[-1].l2_error if self.history else None

    @property
    def h1_error(self) -> float | None:
        return self.history[-1].h1_error if self.history else None


def _traces_norm(traces: list[BoundaryTrace]) -> float:
    return float(np.sqrt(sum(np.sum(t.values ** 2) for t in traces)))


def relative_errors(sigma: AbsorptionMap, truth: AbsorptionMap) -> tuple[float, float]:
    """Relative L2 and H1 distances over omega (absolute when the truth vanishes)."""
    diff = sigma.field - truth.field
    inside = sigma.support_mask.inside_omega
    l2 = float(np.sqrt(np.sum(diff.values[inside] ** 2)))
    l2_ref = float(np.sqrt(np.sum(truth.field.values[inside] ** 2)))
    h1 = h1_norm_field(diff)
    h1_ref = h1_norm_field(truth.field)
    return (l2 / l2_ref if l2_ref > 0 else l2 * diff.grid.h,
            h1 / h1_ref if h1_ref > 0 else h1)


def reconstruct(data: list[BoundaryTrace], setup: AcquisitionSetup, c: SoundSpeedMap,
                sigma0: AbsorptionMap, max_iter: int = 50, step: float = 0.9, tol: float = 1e-3,
                truth: AbsorptionMap | None = None, n_dirs: int = 32, w_floor: float = 0.05,
                model: MeasurementModel | None = None,
                fan: RayFan | None = None) -> ReconstructionState:
    """Iterate sigma <- P+[sigma + step * A(sum_i r_i) / max(w, w_floor * max w)].

    The residuals r_i = data_i - chi_i Lambda(sigma u_i) already carry the cutoff,
    so it is applied once. P+ clips to sigma >= 0 supported in omega.
    """
    if max_iter < 0 or not step > 0 or not tol > 0:
        raise ConfigError("need max_iter >= 0, step > 0 and tol > 0")
    model = model or MeasurementModel(setup, c)
    model.check_data(data)
    mask = sigma0.support_mask
    fan = fan or trace_fan(mask, c, n_dirs)
    data_norm = _traces_norm(data)

    sigma = sigma0
    weight: SymbolWeight | None = None
    history: list[IterationRecord] = []
    back = ScalarField.zeros(mask.grid)
    residuals: list[BoundaryTrace] = []
    previous = np.inf
    rising = 0
    converged = False
    k = 0
    t0 = time.perf_counter()
    for k in range(max_iter + 1):
        fields = model.illuminate(sigma)
        predicted = model.data(sigma, fields)
        residuals = [d - p for d, p in zip(data, predicted)]
        rnorm = _traces_norm(residuals)
        rel = rnorm / data_norm if data_norm > 0 else rnorm
        rec = IterationRecord(k=k, residual=rel)
        if truth is not None:
            rec.l2_error, rec.h1_error = relative_errors(sigma, truth)
        history.append(rec)
        log.info("reconstruct.iteration", **rec.model_dump())
        if rel < tol:
            converged = True
            break
        if k == max_iter:
            break
        rising = rising + 1 if rnorm > previous else 0
        if rising >= DIVERGENCE_PATIENCE:
            log.warning("reconstruct.diverged", iterations=k, residual=rel)
            state = ReconstructionState(sigma, residuals, back, k, False, history)
            raise ReconstructionDiverged([r.residual for r in history], state)
        previous = rnorm
        weight = weight.refresh(fields) if weight else symbol_weight(fields, setup, fan)
        back = model.back_project(residuals)
        update = sigma.field.values + step * back.values / weight.floored(w_floor)
        sigma = AbsorptionMap.project(ScalarField(mask.grid, update), mask)
    log.info("reconstruct.done", iterations=k, converged=converged, residual=history[-1].residual,
             seconds=round(time.perf_counter() - t0, 3))
    return ReconstructionState(sigma, residuals, back, k, converged, history)


def reconstruct_noisy(data: list[BoundaryTrace], level: float, seed: int, setup: AcquisitionSetup,
                      c: SoundSpeedMap, sigma0: AbsorptionMap, **kwargs) -> ReconstructionState:
    """Same iteration on data with additive Gaussian noise (level relative to each trace's peak)."""
    rng = np.random.default_rng(seed)
    noisy = [add_noise(d, level, rng) for d in data]
    return reconstruct(noisy, setup, c, sigma0, **kwargs)
