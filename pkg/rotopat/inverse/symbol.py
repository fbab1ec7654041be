"""Direction-averaged principal symbol of kappa, used as a diagonal preconditioner."""
from __future__ import annotations
from dataclasses import dataclass

import numpy as np

from ..geometry import AcquisitionSetup, ScalarField, cutoff_value
from ..optics import DiffusionSolution
from ..rays import RayFan


def visibility_factors(setup: AcquisitionSetup, fan: RayFan) -> np.ndarray:
    """(m, N): a_i(x) = mean over xi of (chi_i at the + exit + chi_i at the - exit) / 2."""
    out = np.empty((setup.m, len(fan.nodes)))
    for i in range(setup.m):
        plus = np.where(fan.trapped_plus, 0.0, cutoff_value(setup, i, fan.tau_plus, fan.exit_plus))
        minus = np.where(fan.trapped_minus, 0.0,
                         cutoff_value(setup, i, fan.tau_minus, fan.exit_minus))
        out[i] = 0.5 * (plus + minus).mean(axis=1)
    return out


@dataclass
class SymbolWeight:
    w: ScalarField
    floor: float           # beta: min over omega of min_i u_i
    factors: np.ndarray    # (m, N) visibility factors on the fan nodes
    nodes: np.ndarray

    def floored(self, fraction: float = 0.05) -> np.ndarray:
        """max(w, fraction * max w) on the whole grid; 1 where w vanishes identically."""
        top = self.w.values.max(initial=0.0)
        return np.maximum(self.w.values, fraction * top) if top > 0 else np.ones(self.w.grid.shape)

    def refresh(self, fields: list[DiffusionSolution]) -> "SymbolWeight":
        return _assemble(self.factors, self.nodes, fields)


def _assemble(factors: np.ndarray, nodes: np.ndarray,
              fields: list[DiffusionSolution]) -> SymbolWeight:
    grid = fields[0].field.grid
    u = np.stack([f.field.values.ravel()[nodes] for f in fields])
    w = np.zeros(grid.node_count)
    w[nodes] = np.sum(factors * u, axis=0)
    beta = float(u.min()) if nodes.size else 0.0
    return SymbolWeight(ScalarField(grid, w.reshape(grid.shape)), beta, factors, nodes)


def symbol_weight(fields: list[DiffusionSolution], setup: AcquisitionSetup,
                  fan: RayFan) -> SymbolWeight:
    return _assemble(visibility_factors(setup, fan), fan.nodes, fields)
