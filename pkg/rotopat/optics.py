"""Diffusion solves -Lap u + sigma u = 0 in the ball with Dirichlet data g."""
from __future__ import annotations
import time
from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigError, ConvergenceError, SolverError
from .geometry import (AcquisitionSetup, BoundaryFunction, BoundaryParametrization, DomainMask,
                       ScalarField)
from .log import get_logger
from .norms import w1inf_norm
from .pool import map_concurrent
from .stencil import DIFFUSION_MIN_ARM, ball_stencil

log = get_logger("rotopat.optics")

DEFAULT_TOL = 1e-10

__all__ = ["AbsorptionMap", "DiffusionSolution", "solve_diffusion", "solve_linearized",
           "harmonic_extension", "forward_family", "empirical_beta", "w1inf_norm"]


@dataclass
class AbsorptionMap:
    field: ScalarField
    support_mask: DomainMask

    def __post_init__(self):
        v = self.field.values
        if v.min() < 0:
            raise ConfigError(f"absorption must be nonnegative, min={v.min():.3e}")
        if np.any(v[~self.support_mask.inside_omega] != 0):
            raise ConfigError("absorption must vanish outside omega")

    @classmethod
    def zeros(cls, mask: DomainMask) -> "AbsorptionMap":
        return cls(ScalarField.zeros(mask.grid), mask)

    @classmethod
    def project(cls, field: ScalarField, mask: DomainMask) -> "AbsorptionMap":
        """Clip to sigma >= 0 and zero outside omega."""
        v = np.where(mask.inside_omega, np.maximum(field.values, 0.0), 0.0)
        return cls(ScalarField(field.grid, v), mask)

    @property
    def grid(self):
        return self.field.grid

    def w1inf(self) -> float:
        return w1inf_norm(self.field)


@dataclass
class DiffusionSolution:
    field: ScalarField
    rotation: int
    residual_norm: float
    iterations: int


def _values(sigma: AbsorptionMap | ScalarField) -> ScalarField:
    field = sigma.field if isinstance(sigma, AbsorptionMap) else sigma
    if field.values.min() < 0:
        raise ConfigError(f"absorption must be nonnegative, min={field.values.min():.3e}")
    return field


def _cg(A: sp.csr_matrix, rhs: np.ndarray, tol: float, n_cells: int,
        what: str) -> tuple[np.ndarray, float, int]:
    if tol <= 0:
        raise ConfigError(f"solver tolerance must be positive, got {tol}")
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0:
        return np.zeros_like(rhs), 0.0, 0
    inv_diag = 1.0 / A.diagonal()
    M = spla.LinearOperator(A.shape, lambda x: inv_diag * x)
    maxiter = 20 * n_cells
    count = {"n": 0}

    def tick(_):
        count["n"] += 1

    x, info = spla.cg(A, rhs, rtol=tol, atol=0.0, maxiter=maxiter, M=M, callback=tick)
    residual = float(np.linalg.norm(A @ x - rhs) / bnorm)
    if info > 0:
        raise ConvergenceError(f"{what}: conjugate gradients hit the iteration cap", residual,
                               count["n"])
    if info < 0:
        raise SolverError(f"{what}: conjugate gradients failed (info={info})")
    return x, residual, count["n"]


def _system(field: ScalarField, min_arm: float):
    st = ball_stencil(field.grid, min_arm)
    sig = field.values.ravel()[st.unknown]
    A = (-st.laplacian + sp.diags(sig)).tocsr()
    return st, A


def solve_diffusion(sigma: AbsorptionMap | ScalarField, boundary_data: BoundaryFunction,
                    tol: float = DEFAULT_TOL, rotation: int = 0,
                    min_arm: float = DIFFUSION_MIN_ARM) -> DiffusionSolution:
    field = _values(sigma)
    t0 = time.perf_counter()
    st, A = _system(field, min_arm)
    B, S = st.boundary_operators(boundary_data.boundary)
    x, residual, iters = _cg(A, B @ boundary_data.values, tol, field.grid.n_cells_per_side,
                             "diffusion")
    u = ScalarField(field.grid, st.scatter(x, S @ boundary_data.values))
    log.debug("diffusion.solved", rotation=rotation, iterations=iters, residual=residual,
              unknowns=st.n_unknowns, seconds=round(time.perf_counter() - t0, 4))
    return DiffusionSolution(u, rotation, residual, iters)


def solve_linearized(background: AbsorptionMap | ScalarField, u: ScalarField, delta: ScalarField,
                     tol: float = DEFAULT_TOL) -> ScalarField:
    """delta_u with -Lap delta_u + sigma delta_u = -u delta_sigma and zero boundary data."""
    field = _values(background)
    st, A = _system(field, DIFFUSION_MIN_ARM)
    rhs = -(u.values * delta.values).ravel()[st.unknown]
    x, _, _ = _cg(A, rhs, tol, field.grid.n_cells_per_side, "linearized diffusion")
    return ScalarField(field.grid, st.scatter(x))


def harmonic_extension(boundary_data: BoundaryFunction, grid, tol: float = DEFAULT_TOL,
                       method: Literal["cg", "direct"] = "cg",
                       min_arm: float = DIFFUSION_MIN_ARM) -> ScalarField:
    st = ball_stencil(grid, min_arm)
    B, S = st.boundary_operators(boundary_data.boundary)
    rhs = B @ boundary_data.values
    if method == "direct":
        x = st.factor().solve(rhs) if np.any(rhs) else np.zeros_like(rhs)
    else:
        x, _, _ = _cg((-st.laplacian).tocsr(), rhs, tol, grid.n_cells_per_side,
                      "harmonic extension")
    return ScalarField(grid, st.scatter(x, S @ boundary_data.values))


def forward_family(sigma: AbsorptionMap, setup: AcquisitionSetup, tol: float = DEFAULT_TOL,
                   threads: int | None = None) -> list[DiffusionSolution]:
    boundary = BoundaryParametrization.for_grid(sigma.grid)

    def one(i: int) -> DiffusionSolution:
        return solve_diffusion(sigma, setup.illumination_for(i, boundary), tol=tol, rotation=i)

    out = map_concurrent(one, range(setup.m), threads)
    log.info("diffusion.family", rotations=setup.m,
             iterations=[s.iterations for s in out], max_residual=max(s.residual_norm for s in out))
    return out


def empirical_beta(solutions: list[DiffusionSolution], mask: DomainMask) -> float:
    """Discrete min over omega of min_i u_i."""
    if not mask.inside_omega.any():
        raise ConfigError("omega is empty")
    return float(min(s.field.values[mask.inside_omega].min() for s in solutions))
