from ..errors import ConfigError
from .base import BaseCheck, CheckContext, CheckResult
from .diffusion import DiffusionOracleCheck, PoincareCheck
from .operator import DominationCheck, EllipticityCheck
from .reconstruction import ReconstructionCheck, StabilityCheck
from .visibility import RayVisibilityCheck
from .wave import TimeReversalCheck, WaveOracleCheck

DEFAULT_CHECKS: list[BaseCheck] = [
    DiffusionOracleCheck(),
    WaveOracleCheck(),
    TimeReversalCheck(),
    RayVisibilityCheck(),
    EllipticityCheck(),
    DominationCheck(),
    ReconstructionCheck(),
    StabilityCheck(),
    PoincareCheck(),
]


def select_checks(names: list[str] | None = None) -> list[BaseCheck]:
    if not names:
        return list(DEFAULT_CHECKS)
    known = {c.name: c for c in DEFAULT_CHECKS}
    unknown = [n for n in names if n not in known]
    if unknown:
        raise ConfigError(f"unknown checks: {', '.join(unknown)}; known: {', '.join(known)}")
    return [known[n] for n in names]


__all__ = ["BaseCheck", "CheckContext", "CheckResult", "DEFAULT_CHECKS", "select_checks"]
