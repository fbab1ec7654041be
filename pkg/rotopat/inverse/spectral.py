"""Power iterations: Poincare constant of omega and operator-norm estimates."""
from __future__ import annotations
import time
from typing import Callable

import numpy as np
from scipy import linalg

from ..errors import ConfigError, ConvergenceError
from ..geometry import DomainMask, Grid, ScalarField
from ..log import get_logger
from ..pool import map_concurrent
from ..stencil import DIFFUSION_MIN_ARM, circle_stencil
from .operator import MeasurementModel, hat_basis

log = get_logger("rotopat.spectral")


def power_iteration(apply: Callable[[np.ndarray], np.ndarray], x0: np.ndarray, tol: float = 1e-6,
                    max_iter: int = 200) -> tuple[float, np.ndarray, int]:
    """Dominant |eigenvalue| of a linear map given as a vector function."""
    x = np.asarray(x0, dtype=float)
    norm = np.linalg.norm(x)
    if norm == 0:
        raise ConfigError("power iteration needs a nonzero start vector")
    x = x / norm
    lam = 0.0
    for k in range(1, max_iter + 1):
        y = apply(x)
        new = float(np.linalg.norm(y))
        if new == 0:
            return 0.0, x, k
        x = y / new
        if abs(new - lam) <= tol * new:
            return new, x, k
        lam = new
    return lam, x, max_iter


def poincare_constant(mask: DomainMask, tol: float = 1e-6, max_iter: int = 500) -> float:
    """C = lambda_1^{-1/2} for the Dirichlet Laplacian on omega, by inverse iteration."""
    if mask.omega_count == 0:
        raise ConfigError("omega is empty")
    st = circle_stencil(mask.grid, mask.omega_radius, mask.omega_center, DIFFUSION_MIN_ARM)
    A = (-st.laplacian).tocsr()
    lu = st.factor()
    x = np.ones(st.n_unknowns) / np.sqrt(st.n_unknowns)
    lam = np.inf
    for k in range(1, max_iter + 1):
        y = lu.solve(x)
        x = y / np.linalg.norm(y)
        new = float(x @ (A @ x))
        if abs(new - lam) <= tol * new:
            log.info("poincare.converged", iterations=k, eigenvalue=new)
            return 1.0 / np.sqrt(new)
        lam = new
    raise ConvergenceError("inverse power iteration did not converge", abs(new - lam) / new,
                           max_iter)


def time_reversal_norm(model: MeasurementModel, mask: DomainMask, coarse_grid: Grid,
                       tol: float = 1e-6, max_iter: int = 500, threads: int | None = None) -> float:
    """L2 operator norm of H -> P A(sum_i chi_i Lambda(H)) on the coarse hats inside omega.

    The Galerkin matrix M acts on hat coefficients; with G = R^T R the Gram matrix,
    N = R M R^-1 is the same map in an orthonormal basis and the norm is the square
    root of the top eigenvalue of N^T N.
    """
    basis, nodes = hat_basis(model.grid, coarse_grid, mask)
    grid = model.grid
    gram = (basis.T @ basis).toarray()
    R = linalg.cholesky(gram)
    t0 = time.perf_counter()

    def column(j: int) -> np.ndarray:
        H = ScalarField(grid, basis[:, j].toarray().reshape(grid.shape))
        back = model.back_project([model.observe(i, H) for i in range(model.m)])
        return linalg.solve(gram, basis.T @ back.values.ravel(), assume_a="pos")

    M = np.stack(map_concurrent(column, range(len(nodes)), threads), axis=1)
    N = R @ linalg.solve_triangular(R, M.T, trans="T").T
    lam, _, k = power_iteration(lambda x: N.T @ (N @ x), np.ones(len(nodes)), tol=tol,
                                max_iter=max_iter)
    log.info("time_reversal.norm", hats=len(nodes), iterations=k, norm=float(np.sqrt(lam)),
             seconds=round(time.perf_counter() - t0, 3))
    return float(np.sqrt(lam))
