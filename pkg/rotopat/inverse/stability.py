"""Empirical checks of the Lipschitz stability estimate and the smallness regime."""
from __future__ import annotations
import time

import numpy as np
from pydantic import BaseModel, Field

from ..acoustics import BoundaryTrace, SoundSpeedMap
from ..geometry import AcquisitionSetup, ScalarField
from ..log import get_logger
from ..norms import h1_norm_field, h1_norm_trace
from ..optics import AbsorptionMap, solve_linearized
from ..pool import map_concurrent
from .operator import MeasurementModel
from .spectral import poincare_constant

log = get_logger("rotopat.stability")


class StabilityReport(BaseModel):
    pairs_tested: int = 0
    ratios: list[float | None] = Field(default_factory=list)
    field_norms: list[float] = Field(default_factory=list)
    data_norms: list[float] = Field(default_factory=list)
    margins: list[float] = Field(default_factory=list)
    poincare: float = 0.0
    c_star: float | None = None
    excluded: list[int] = Field(default_factory=list)
    injectivity_violations: list[int] = Field(default_factory=list)

    def to_dict(self) -> dict:
        return self.model_dump()


def smallness_margin(sigma: AbsorptionMap, poincare: float | None = None) -> float:
    """C_omega * ||sigma||_{W^{1,inf}}."""
    if poincare is None:
        poincare = poincare_constant(sigma.support_mask)
    return poincare * sigma.w1inf()


def _data_distance(a: list[BoundaryTrace], b: list[BoundaryTrace]) -> tuple[float, float]:
    dist = sum(h1_norm_trace(x - y) for x, y in zip(a, b))
    scale = sum(h1_norm_trace(x) + h1_norm_trace(y) for x, y in zip(a, b))
    return float(dist), float(scale)


def stability_experiment(pairs: list[tuple[AbsorptionMap, AbsorptionMap]], setup: AcquisitionSetup,
                         c: SoundSpeedMap, model: MeasurementModel | None = None,
                         zero_tol: float = 1e-12) -> StabilityReport:
    """Both sides of the stability estimate

        ||sigma - sigma~||_H1 <= C sum_i ||chi_i(Lambda*_i sigma - Lambda*_i sigma~)||_H1.
    """
    model = model or MeasurementModel(setup, c)
    report = StabilityReport(pairs_tested=len(pairs))
    if not pairs:
        return report
    report.poincare = poincare_constant(pairs[0][1].support_mask)
    t0 = time.perf_counter()
    for idx, (sigma, background) in enumerate(pairs):
        field_norm = h1_norm_field(sigma.field - background.field)
        report.field_norms.append(field_norm)
        report.margins.append(smallness_margin(background, report.poincare))
        if field_norm == 0:
            report.excluded.append(idx)
            report.data_norms.append(0.0)
            report.ratios.append(None)
            continue
        dist, scale = _data_distance(model.data(sigma), model.data(background))
        report.data_norms.append(dist)
        if dist <= zero_tol * max(scale, 1.0):
            report.injectivity_violations.append(idx)
            report.ratios.append(None)
            continue
        report.ratios.append(field_norm / dist)
    finite = [r for r in report.ratios if r is not None]
    report.c_star = max(finite) if finite else None
    log.info("stability.sweep", pairs=len(pairs), c_star=report.c_star,
             excluded=len(report.excluded), violations=len(report.injectivity_violations),
             seconds=round(time.perf_counter() - t0, 3))
    return report


def domination_ratio(background: AbsorptionMap, delta: ScalarField, setup: AcquisitionSetup,
                     c: SoundSpeedMap, model: MeasurementModel | None = None) -> float:
    """||sum_i chi_i Lambda(sigma~ du_i)||_H1 / ||sum_i chi_i Lambda(u_i delta)||_H1."""
    model = model or MeasurementModel(setup, c)
    fields = model.illuminate(background)
    delta = background.support_mask.restrict(delta)

    def one(i: int) -> tuple[BoundaryTrace, BoundaryTrace]:
        u = fields[i].field
        du = solve_linearized(background, u, delta, tol=model.tol)
        return model.observe(i, background.field * du), model.observe(i, u * delta)

    parts = map_concurrent(one, range(model.m), model.threads)
    higher = model.zero_trace()
    principal = model.zero_trace()
    for hi, pr in parts:
        higher = higher + hi
        principal = principal + pr
    den = h1_norm_trace(principal)
    return float(h1_norm_trace(higher) / den) if den > 0 else float("inf")
