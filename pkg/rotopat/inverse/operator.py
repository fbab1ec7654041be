"""Measurement maps, the linearized operator kappa and its coarse Galerkin matrix."""
from __future__ import annotations
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy import linalg

from ..acoustics import (DEFAULT_SPONGE_STRENGTH, MAX_CFL, BoundaryTrace, SoundSpeedMap,
                         back_propagate, measure, propagate, time_grid)
from ..errors import AssemblyBudgetError, GeometryError, ShapeMismatchError
from ..geometry import (AcquisitionSetup, BoundaryParametrization, DomainMask, Grid, ScalarField,
                        build_cutoff)
from ..log import get_logger
from ..optics import DEFAULT_TOL, AbsorptionMap, DiffusionSolution, forward_family, solve_linearized
from ..pool import map_concurrent

log = get_logger("rotopat.inverse")

KAPPA_BUDGET = 1200


class MeasurementModel:
    """One acquisition (setup + medium) on one grid: cutoffs, observation and time reversal."""

    def __init__(self, setup: AcquisitionSetup, c: SoundSpeedMap, tol: float = DEFAULT_TOL,
                 cfl: float = MAX_CFL, threads: int | None = None,
                 sponge_strength: float = DEFAULT_SPONGE_STRENGTH):
        self.setup = setup
        self.c = c
        self.grid = c.grid
        self.tol = tol
        self.cfl = cfl
        self.threads = threads
        self.sponge_strength = sponge_strength
        self.boundary = BoundaryParametrization.for_grid(self.grid)
        self.dt, self.n_steps = time_grid(self.grid, c, setup.total_time, cfl)
        self.times = self.dt * np.arange(self.n_steps + 1)
        self._cutoffs = [build_cutoff(setup, i, self.boundary, self.times) for i in range(setup.m)]

    @property
    def m(self) -> int:
        return self.setup.m

    def cutoff(self, i: int) -> np.ndarray:
        return self._cutoffs[i]

    def zero_trace(self) -> BoundaryTrace:
        return BoundaryTrace(np.zeros((self.n_steps + 1, self.boundary.n_boundary_points)),
                             self.dt, self.boundary)

    def observe(self, i: int, H: ScalarField) -> BoundaryTrace:
        """chi_i Lambda(H)."""
        if not np.any(H.values):
            return self.zero_trace()
        res = propagate(H, self.c, self.setup.total_time, self.cfl, self.boundary,
                        self.sponge_strength)
        return measure(res.trace, self._cutoffs[i])

    def illuminate(self, sigma: AbsorptionMap) -> list[DiffusionSolution]:
        return forward_family(sigma, self.setup, tol=self.tol, threads=self.threads)

    def data(self, sigma: AbsorptionMap,
             fields: list[DiffusionSolution] | None = None) -> list[BoundaryTrace]:
        """chi_i Lambda(sigma u_i) for every rotation."""
        fields = fields or self.illuminate(sigma)
        return map_concurrent(lambda i: self.observe(i, sigma.field * fields[i].field),
                              range(self.m), self.threads)

    def back_project(self, traces) -> ScalarField:
        if isinstance(traces, BoundaryTrace):
            traces = [traces]
        total = self.zero_trace()
        for tr in traces:
            total = total + tr
        return back_propagate(total, self.c, self.setup.total_time)

    def check_data(self, data: list[BoundaryTrace]) -> None:
        if len(data) != self.m:
            raise ShapeMismatchError(f"expected {self.m} traces, got {len(data)}")
        shape = (self.n_steps + 1, self.boundary.n_boundary_points)
        for tr in data:
            if tr.values.shape != shape or abs(tr.dt - self.dt) > 1e-12 * self.dt:
                raise ShapeMismatchError(
                    f"trace shape {tr.values.shape}/dt={tr.dt:.6g} does not match "
                    f"{shape}/dt={self.dt:.6g}")


class LinearizedOperator:
    """kappa(delta) = A(sum_i chi_i Lambda(u_i delta)) around a background absorption."""

    def __init__(self, background: AbsorptionMap, model: MeasurementModel,
                 fields: list[DiffusionSolution] | None = None):
        self.background = background
        self.model = model
        self.mask = background.support_mask
        self.fields = fields or model.illuminate(background)

    def principal_data(self, delta: ScalarField) -> list[BoundaryTrace]:
        return map_concurrent(lambda i: self.model.observe(i, self.fields[i].field * delta),
                              range(self.model.m), self.model.threads)

    def apply(self, delta: ScalarField) -> ScalarField:
        delta = self.mask.restrict(delta)
        return self.mask.restrict(self.model.back_project(self.principal_data(delta)))

    __call__ = apply


def data_derivative(sigma: AbsorptionMap, delta: ScalarField, model: MeasurementModel,
                    fields: list[DiffusionSolution] | None = None) -> list[BoundaryTrace]:
    """Full derivative of the data map: chi_i Lambda(u_i delta + sigma delta_u_i)."""
    fields = fields or model.illuminate(sigma)

    def one(i: int) -> BoundaryTrace:
        u = fields[i].field
        du = solve_linearized(sigma, u, delta, tol=model.tol)
        return model.observe(i, u * delta + sigma.field * du)

    return map_concurrent(one, range(model.m), model.threads)


# coarse Galerkin assembly

def _hat_1d(fine: np.ndarray, coarse: np.ndarray, hc: float) -> sp.csr_matrix:
    w = np.maximum(0.0, 1.0 - np.abs(fine[:, None] - coarse[None, :]) / hc)
    return sp.csr_matrix(w)


def hat_basis(grid: Grid, coarse_grid: Grid,
              mask: DomainMask) -> tuple[sp.csc_matrix, np.ndarray]:
    """Coarse-grid bilinear hats supported inside omega, sampled on the fine grid."""
    hc = coarse_grid.h
    Xc, Yc = coarse_grid.mesh()
    cx, cy = mask.omega_center
    dist = np.hypot(Xc - cx, Yc - cy)
    nodes = np.flatnonzero((dist < mask.omega_radius - np.sqrt(2) * hc).ravel())
    if nodes.size == 0:
        raise GeometryError("no coarse hat function fits inside omega")
    if nodes.size > KAPPA_BUDGET:
        raise AssemblyBudgetError(
            f"{nodes.size} coarse omega nodes exceed the budget of {KAPPA_BUDGET}")
    H1 = _hat_1d(grid.coords, coarse_grid.coords, hc)
    basis = sp.kron(H1, H1, format="csc")[:, nodes]
    return basis, nodes


@dataclass
class KappaMatrix:
    matrix: np.ndarray
    coarse_grid: Grid
    coarse_nodes: np.ndarray
    basis: sp.csc_matrix
    operator: LinearizedOperator = field(repr=False)
    _gram: tuple = field(default=None, repr=False)

    def __post_init__(self):
        if self._gram is None:
            G = (self.basis.T @ self.basis).toarray()
            self._gram = linalg.cho_factor(G)

    @property
    def size(self) -> int:
        return len(self.coarse_nodes)

    def to_field(self, coef: np.ndarray) -> ScalarField:
        grid = self.operator.model.grid
        return ScalarField(grid, (self.basis @ np.asarray(coef, dtype=float)).reshape(grid.shape))

    def project(self, field: ScalarField) -> np.ndarray:
        """L2 projection of a fine-grid field onto the hat span."""
        return linalg.cho_solve(self._gram, self.basis.T @ field.values.ravel())

    def apply(self, coef: np.ndarray) -> np.ndarray:
        return self.project(self.operator.apply(self.to_field(coef)))

    def singular_values(self) -> np.ndarray:
        return linalg.svdvals(self.matrix)


def assemble_kappa(background: AbsorptionMap, setup: AcquisitionSetup, c: SoundSpeedMap,
                   coarse_grid: Grid, threads: int | None = None, **model_kwargs) -> KappaMatrix:
    mask = background.support_mask
    basis, nodes = hat_basis(background.grid, coarse_grid, mask)
    model = MeasurementModel(setup, c, threads=1, **model_kwargs)
    op = LinearizedOperator(background, model)
    K = KappaMatrix(np.zeros((len(nodes), len(nodes))), coarse_grid, nodes, basis, op)
    t0 = time.perf_counter()
    eye = np.eye(len(nodes))
    cols = map_concurrent(lambda j: K.apply(eye[:, j]), range(len(nodes)), threads)
    K.matrix = np.stack(cols, axis=1)
    log.info("kappa.assembled", size=len(nodes), rotations=setup.m,
             seconds=round(time.perf_counter() - t0, 3))
    return K


def measurement_matrix(background: AbsorptionMap, setup: AcquisitionSetup, c: SoundSpeedMap,
                       coarse_grid: Grid, j: int, threads: int | None = None,
                       **model_kwargs) -> np.ndarray:
    """Single-rotation map coef -> chi_j Lambda(u_j delta), in the L2 weight of the trace."""
    mask = background.support_mask
    basis, nodes = hat_basis(background.grid, coarse_grid, mask)
    model = MeasurementModel(setup, c, threads=1, **model_kwargs)
    u = model.illuminate(background)[j].field
    grid = background.grid
    weight = np.sqrt(model.dt * model.boundary.arc_length_step)

    def column(k: int) -> np.ndarray:
        delta = ScalarField(grid, basis[:, k].toarray().reshape(grid.shape))
        return weight * model.observe(j, u * delta).values.ravel()

    return np.stack(map_concurrent(column, range(len(nodes)), threads), axis=1)


def singular_values(matrix: np.ndarray) -> np.ndarray:
    return linalg.svdvals(matrix)
