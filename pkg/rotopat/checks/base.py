from __future__ import annotations
import time
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field

from ..acoustics import SoundSpeedMap
from ..geometry import DomainMask, Grid, build_mask

OMEGA_RADIUS = 0.35


class CheckResult(BaseModel):
    name: str
    criterion: str
    passed: bool
    metrics: dict[str, float | int | bool | str | None] = Field(default_factory=dict)
    seconds: float = 0.0
    detail: str = ""

    def to_dict(self) -> dict:
        return self.model_dump()


@dataclass
class CheckContext:
    scale: Literal["quick", "full"] = "quick"
    seed: int = 0
    threads: int | None = None
    memo: dict = field(default_factory=dict)

    def pick(self, quick, full):
        return full if self.scale == "full" else quick

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def medium(self, grid: Grid) -> tuple[DomainMask, SoundSpeedMap]:
        key = ("medium", grid)
        if key not in self.memo:
            self.memo[key] = (build_mask(grid, OMEGA_RADIUS), SoundSpeedMap.constant(grid))
        return self.memo[key]


class BaseCheck:
    name = "base"
    criterion = ""

    def run(self, ctx: CheckContext) -> CheckResult:
        raise NotImplementedError

    def __call__(self, ctx: CheckContext) -> CheckResult:
        t0 = time.perf_counter()
        res = self.run(ctx)
        res.seconds = round(time.perf_counter() - t0, 3)
        return res

    def _result(self, passed: bool, detail: str = "", **metrics) -> CheckResult:
        clean = {k: (float(v) if isinstance(v, np.floating) else v) for k, v in metrics.items()}
        return CheckResult(name=self.name, criterion=self.criterion, passed=bool(passed),
                           metrics=clean, detail=detail)
