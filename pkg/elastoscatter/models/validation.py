import sys
from typing import List, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from elastoscatter.models.greens import QuadratureConfig

CheckStatus = Literal["pass", "fail", "skip"]
CheckGroup = Literal["algebra", "waves", "spectral", "greens"]

ALL_GROUPS: List[str] = ["algebra", "waves", "spectral", "greens"]


class CheckResult(BaseModel):
    """検証チェック1件の結果"""
    model_config = ConfigDict(frozen=True)

    name: str
    group: str
    status: CheckStatus
    measured: float
    tolerance: float
    detail: str = ""

    @classmethod
    def evaluate(cls, name: str, group: str, measured: float, tolerance: float, detail: str = "") -> "CheckResult":
        """measured ≤ tolerance なら pass"""
        measured = float(measured)
        if not np.isfinite(measured):
            return cls(name=name, group=group, status="fail", measured=sys.float_info.max,
                       tolerance=tolerance, detail=detail or "non-finite measurement")
        status = "pass" if measured <= tolerance else "fail"
        return cls(name=name, group=group, status=status, measured=measured, tolerance=tolerance, detail=detail)

    @classmethod
    def skipped(cls, name: str, group: str, tolerance: float, detail: str) -> "CheckResult":
        return cls(name=name, group=group, status="skip", measured=0.0, tolerance=tolerance, detail=detail)


class ValidationReport(BaseModel):
    checks: List[CheckResult] = Field(default_factory=list)

    @property
    def n_passed(self) -> int:
        return sum(1 for c in self.checks if c.status == "pass")

    @property
    def n_failed(self) -> int:
        return sum(1 for c in self.checks if c.status == "fail")

    @property
    def n_skipped(self) -> int:
        return sum(1 for c in self.checks if c.status == "skip")

    @property
    def all_passed(self) -> bool:
        return self.n_failed == 0

    def names(self) -> List[str]:
        return [c.name for c in self.checks]


class SuiteConfig(BaseModel):
    """検証スイートの設定"""
    model_config = ConfigDict(frozen=True)

    groups: List[CheckGroup] = Field(default_factory=lambda: list(ALL_GROUPS))
    seed: int = 0
    threads: int = Field(1, ge=1)
    quadrature: QuadratureConfig = Field(default_factory=QuadratureConfig)
