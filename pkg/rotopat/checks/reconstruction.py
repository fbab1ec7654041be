from __future__ import annotations
import numpy as np

from ..errors import ReconstructionDiverged
from ..geometry import AcquisitionSetup, Grid
from ..inverse import MeasurementModel, reconstruct, stability_experiment
from ..optics import AbsorptionMap
from ..phantom import Bump, PhantomSpec, generate_phantom, random_phantom_spec
from .base import BaseCheck, CheckContext
from .operator import invisible_setup


def recovery_error(setup: AcquisitionSetup, truth: AbsorptionMap, c, max_iter: int,
                   threads: int | None) -> tuple[float, bool]:
    """Relative L2 error of the final iterate and whether the iteration diverged."""
    model = MeasurementModel(setup, c, threads=threads)
    data = model.data(truth)
    try:
        state = reconstruct(data, setup, c, AbsorptionMap.zeros(truth.support_mask),
                            max_iter=max_iter, truth=truth, model=model)
    except ReconstructionDiverged as e:
        if e.state is None or e.state.l2_error is None:
            return float("inf"), True
        return float(e.state.l2_error), True
    return float(state.l2_error), False


class ReconstructionCheck(BaseCheck):
    name = "reconstruction"
    criterion = ("inverse-crime recovery (m = 8, amplitude 0.5) to rel. L2 <= 0.1 in <= "
                 "50 iterations; invisible >= 2x worse")

    def run(self, ctx: CheckContext):
        grid = Grid.from_cells(1.0, 0.25, ctx.pick(64, 128))
        mask, c = ctx.medium(grid)
        truth = generate_phantom(PhantomSpec(bumps=(Bump(amplitude=0.5),)), mask).sigma
        setup = AcquisitionSetup.default(grid.rho, m=8)
        visible, diverged = recovery_error(setup, truth, c, 50, ctx.threads)
        invisible, diverged_invisible = recovery_error(invisible_setup(grid.rho), truth, c, 50,
                                                       ctx.threads)
        return self._result(not diverged and visible <= 0.1 and invisible >= 2 * visible,
                            l2_error=visible, l2_error_invisible=invisible,
                            diverged=diverged, diverged_invisible=diverged_invisible)


class StabilityCheck(BaseCheck):
    name = "stability_estimate"
    criterion = ("10 random pairs: all ratios finite, max ratio within 2x between 96^2 "
                 "and 128^2, no zero data difference")

    def run(self, ctx: CheckContext):
        sizes = ctx.pick((32, 48), (96, 128))
        n_pairs = ctx.pick(3, 10)
        c_star = {}
        finite = True
        violations = 0
        for n in sizes:
            grid = Grid.from_cells(1.0, 0.25, n)
            mask, c = ctx.medium(grid)
            setup = AcquisitionSetup.default(grid.rho, m=ctx.pick(4, 8))
            rng = ctx.rng()
            pairs = []
            for _ in range(n_pairs):
                a = generate_phantom(random_phantom_spec(rng, mask), mask).sigma
                b = generate_phantom(random_phantom_spec(rng, mask), mask).sigma
                pairs.append((a, b))
            model = MeasurementModel(setup, c, threads=ctx.threads)
            report = stability_experiment(pairs, setup, c, model)
            finite &= all(r is not None and np.isfinite(r) for k, r in enumerate(report.ratios)
                          if k not in report.excluded)
            violations += len(report.injectivity_violations)
            c_star[n] = report.c_star
        lo, hi = sizes
        ratio = (c_star[lo] / c_star[hi]) if c_star[lo] and c_star[hi] else float("inf")
        return self._result(finite and violations == 0 and 0.5 <= ratio <= 2.0,
                            c_star_coarse=c_star[lo], c_star_fine=c_star[hi],
                            grid_ratio=ratio, violations=violations)
