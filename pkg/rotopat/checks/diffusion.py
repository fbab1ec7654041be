from __future__ import annotations
import numpy as np

from ..geometry import (BoundaryFunction, BoundaryParametrization, Grid, ScalarField,
                        inside_closed_disk)
from ..inverse import poincare_constant
from ..optics import solve_diffusion
from ..oracles import disk_poincare_constant, radial_bessel_solution
from .base import OMEGA_RADIUS, BaseCheck, CheckContext


def bessel_error(spacing: float) -> float:
    """Relative max error of the sigma = 1, g = 1 diffusion solve on the unit ball."""
    grid = Grid.from_spacing(1.0, 0.25, spacing)
    boundary = BoundaryParametrization.for_grid(grid)
    sol = solve_diffusion(ScalarField.constant(grid, 1.0), BoundaryFunction.constant(boundary, 1.0),
                          tol=1e-12)
    exact = radial_bessel_solution(grid).values
    inside = inside_closed_disk(grid, grid.rho)
    return float(np.abs(sol.field.values - exact)[inside].max() / np.abs(exact[inside]).max())


class DiffusionOracleCheck(BaseCheck):
    name = "diffusion_oracle"
    criterion = "radial Bessel solution: rel. max error <= 1e-3 at h = 1/128, order in [1.6, 2.4]"

    def run(self, ctx: CheckContext):
        coarse, fine = ctx.pick((1 / 32, 1 / 64), (1 / 64, 1 / 128))
        e_coarse, e_fine = bessel_error(coarse), bessel_error(fine)
        order = float(np.log2(e_coarse / e_fine)) if e_fine > 0 else float("inf")
        bound = 1e-3 * (fine * 128) ** 2
        return self._result(e_fine <= bound and 1.6 <= order <= 2.4,
                            error_coarse=e_coarse, error_fine=e_fine, order=order, bound=bound)


class PoincareCheck(BaseCheck):
    name = "poincare_constant"
    criterion = "disk Poincare constant r / j0,1 within 1e-2 at h = 1/128"

    def run(self, ctx: CheckContext):
        grid = Grid.from_spacing(1.0, 0.25, ctx.pick(1 / 64, 1 / 128))
        mask, _ = ctx.medium(grid)
        value = poincare_constant(mask)
        exact = disk_poincare_constant(OMEGA_RADIUS)
        rel = abs(value - exact) / exact
        return self._result(rel <= 1e-2, value=value, exact=exact, relative_error=rel)
