from __future__ import annotations
import numpy as np

from ..geometry import AcquisitionSetup, Arc, Grid
from ..inverse import (MeasurementModel, assemble_kappa, domination_ratio, poincare_constant,
                       smallness_margin)
from ..optics import AbsorptionMap
from ..phantom import Bump, PhantomSpec, generate_phantom, random_phantom_spec
from .base import BaseCheck, CheckContext


def invisible_setup(rho: float) -> AcquisitionSetup:
    """One rotation, a pi/6 arc: most singularities of omega never reach the plateau."""
    return AcquisitionSetup.default(rho, m=1, transducer=Arc(width=np.pi / 6))


# kappa is elliptic only when the rotations see every direction of omega; both scales
# run at these sizes
ELLIPTICITY_CELLS = 128
ELLIPTICITY_ANGLES = 8


class EllipticityCheck(BaseCheck):
    name = "kappa_ellipticity"
    criterion = ("smallest singular value of kappa positive, 24^2 vs 32^2 within 2x; "
                 "invisible aperture >= 10x smaller")

    def run(self, ctx: CheckContext):
        grid = Grid.from_cells(1.0, 0.25, ELLIPTICITY_CELLS)
        mask, c = ctx.medium(grid)
        background = AbsorptionMap.zeros(mask)
        visible = AcquisitionSetup.default(grid.rho, m=ELLIPTICITY_ANGLES)
        s = {}
        for n in (24, 32):
            K = assemble_kappa(background, visible, c, Grid.from_cells(grid.rho, grid.margin, n),
                               threads=ctx.threads)
            s[n] = float(K.singular_values().min())
        K_inv = assemble_kappa(background, invisible_setup(grid.rho), c,
                               Grid.from_cells(grid.rho, grid.margin, 32), threads=ctx.threads)
        s_inv = float(K_inv.singular_values().min())
        ratio = s[24] / s[32] if s[32] > 0 else float("inf")
        drop = s[32] / s_inv if s_inv > 0 else float("inf")
        return self._result(s[24] > 0 and 0.5 <= ratio <= 2.0 and drop >= 10.0,
                            s_min_24=s[24], s_min_32=s[32], s_min_invisible=s_inv,
                            grid_ratio=ratio, invisible_drop=drop)


class DominationCheck(BaseCheck):
    name = "higher_order_domination"
    criterion = ("within the smallness regime the background term is <= 0.5 of the "
                 "principal term (5 samples)")

    def run(self, ctx: CheckContext):
        grid = Grid.from_cells(1.0, 0.25, ctx.pick(48, 96))
        mask, c = ctx.medium(grid)
        setup = AcquisitionSetup.default(grid.rho, m=ctx.pick(4, 8))
        background = generate_phantom(PhantomSpec(bumps=(Bump(amplitude=0.05),)), mask).sigma
        model = MeasurementModel(setup, c, threads=ctx.threads)
        rng = ctx.rng()
        ratios = []
        for _ in range(5):
            spec = random_phantom_spec(rng, mask, max_amplitude=0.3)
            delta = generate_phantom(spec, mask).sigma.field
            ratios.append(domination_ratio(background, delta, setup, c, model))
        worst = max(ratios)
        return self._result(worst <= 0.5, worst_ratio=worst,
                            smallness_margin=smallness_margin(background, poincare_constant(mask)))
