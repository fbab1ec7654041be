from __future__ import annotations
import numpy as np

from ..geometry import AcquisitionSetup, Arc, Grid
from ..oracles import chord_exits, line_arc_coverage
from ..rays import check_stability, covered_directions, trace_fan, trace_ray
from .base import BaseCheck, CheckContext


class RayVisibilityCheck(BaseCheck):
    name = "rays_visibility"
    criterion = ("c = 1 rays exact to 1e-6; visibility verdict equals the line-arc "
                 "oracle (8 rotations, pi/6 arcs)")

    def run(self, ctx: CheckContext):
        grid = Grid.from_spacing(1.0, 0.25, ctx.pick(1 / 32, 1 / 64))
        mask, c = ctx.medium(grid)
        rng = ctx.rng()
        worst = 0.0
        for _ in range(ctx.pick(8, 32)):
            x = rng.uniform(-0.3, 0.3, 2)
            a = rng.uniform(0, 2 * np.pi)
            xi = np.array([np.cos(a), np.sin(a)])
            ray = trace_ray(x, xi, c)
            tp, tm, ep, em = chord_exits(x, xi, grid.rho)
            worst = max(worst, abs(ray.tau_plus - tp[0]), abs(ray.tau_minus - tm[0]),
                        float(np.linalg.norm(ray.exit_point_plus - ep[0])),
                        float(np.linalg.norm(ray.exit_point_minus - em[0])))

        setup = AcquisitionSetup.default(grid.rho, m=8, transducer=Arc(width=np.pi / 6))
        fan = trace_fan(mask, c, n_dirs=ctx.pick(16, 32))
        report = check_stability(setup, mask, c, fan=fan)
        oracle = line_arc_coverage(setup, fan.points, fan.directions, grid.rho)
        agree = bool(np.array_equal(covered_directions(setup, fan), oracle))
        same_verdict = report.stability_ok == bool(oracle.all())
        return self._result(worst <= 1e-6 and agree and same_verdict, ray_error=worst,
                            samples_agree=agree, stability_ok=report.stability_ok,
                            coverage_fraction=report.coverage_fraction)
