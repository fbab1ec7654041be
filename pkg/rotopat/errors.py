from __future__ import annotations
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .inverse.reconstruct import ReconstructionState


class RotopatError(Exception):
    """Base class; `exit_code` is what the CLI exits with."""
    exit_code = 1


class ConfigError(RotopatError):
    exit_code = 2


class GeometryError(ConfigError):
    pass


class ShapeMismatchError(ConfigError):
    pass


class AssemblyBudgetError(ConfigError):
    pass


class CFLError(ConfigError):
    def __init__(self, dt: float, required_dt: float):
        super().__init__(f"time step {dt:.6g} violates CFL; need dt <= {required_dt:.6g}")
        self.dt = dt
        self.required_dt = required_dt


class SolverError(RotopatError):
    exit_code = 3


class ConvergenceError(SolverError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


class ReconstructionDiverged(SolverError):
    """`state` holds the last iterate so callers can still score it."""

    def __init__(self, history: list[float], state: ReconstructionState | None = None):
        tail = ", ".join(f"{r:.3e}" for r in history[-6:])
        super().__init__(f"data residual grew for 5 consecutive steps: [{tail}]")
        self.history = list(history)
        self.state = state


class AcceptanceError(RotopatError):
    exit_code = 4
