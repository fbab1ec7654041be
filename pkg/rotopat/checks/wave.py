from __future__ import annotations
import numpy as np

from ..acoustics import back_propagate, propagate
from ..geometry import Grid
from ..oracles import gaussian_source, poisson_gaussian_trace
from .base import BaseCheck, CheckContext

SOURCE_WIDTH = 0.15


class WaveOracleCheck(BaseCheck):
    name = "wave_oracle"
    criterion = ("Gaussian source vs Poisson quadrature: trace rel. L2 <= 2e-2 at h = "
                 "1/256; energy drift <= 1e-4")

    def run(self, ctx: CheckContext):
        h = ctx.pick(1 / 128, 1 / 256)
        grid = Grid.from_spacing(1.0, 0.25, h)
        _, c = ctx.medium(grid)
        H = gaussian_source(grid, width=SOURCE_WIDTH)
        res = propagate(H, c, 1.5)
        trace = res.trace.values[:, 0]
        exact = poisson_gaussian_trace(res.trace.times, grid.rho, SOURCE_WIDTH)
        err = float(np.linalg.norm(trace - exact) / np.linalg.norm(exact))

        early = propagate(H, c, 0.5, record_energy=True).energy
        drift = float(np.abs(early - early[0]).max() / abs(early[0]))
        bound = 2e-2 * (h * 256) ** 2
        return self._result(err <= bound and drift <= 1e-4,
                            trace_error=err, energy_drift=drift, bound=bound)


class TimeReversalCheck(BaseCheck):
    name = "time_reversal"
    criterion = "complete data, c = 1, T = 2.4: ||A Lambda H - H|| / ||H|| <= 0.1"

    def run(self, ctx: CheckContext):
        grid = Grid.from_spacing(1.0, 0.25, ctx.pick(1 / 64, 1 / 128))
        _, c = ctx.medium(grid)
        H = gaussian_source(grid, center=(0.1, 0.05), width=SOURCE_WIDTH)
        T = 2.4 * grid.rho
        back = back_propagate(propagate(H, c, T).trace, c, T)
        err = (back - H).l2() / H.l2()
        return self._result(err <= 0.1, relative_error=err)
