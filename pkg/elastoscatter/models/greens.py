import math
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import brentq

from elastoscatter.config.settings import settings
from elastoscatter.models.medium import ElasticMedium


class QuadratureConfig(BaseModel):
    """補正積分 U の求積設定（不変）"""
    model_config = ConfigDict(frozen=True)

    tolerance: float = Field(default_factory=lambda: settings.quadrature_tolerance, gt=0.0)
    h_min_factor: float = Field(1e-3, gt=0.0, description="h_min = h_min_factor / κ_s")
    min_angular: int = Field(16, ge=8)
    angular_per_wavenumber: int = Field(8, ge=1, description="κ_s·|y'−x'| あたりの角度点数")
    max_angular_doublings: int = Field(3, ge=0)
    max_subintervals: int = Field(200, ge=10, description="quad_vec のパネル上限")
    angular_method: Literal["trapezoid", "bessel"] = "trapezoid"

    def h_min(self, medium: ElasticMedium) -> float:
        return self.h_min_factor / medium.kappa_s

    def truncation_radius(self, medium: ElasticMedium, height: float) -> float:
        """e^{−sqrt(ξ²−κ_s²)·h}·(κ_s ξ)² = tolerance となる ξ（下限 1.5κ_s）"""
        ks = medium.kappa_s
        log_tol = math.log(self.tolerance)

        def excess(xi: float) -> float:
            return -math.sqrt(xi * xi - ks * ks) * height + 2.0 * math.log(ks * xi) - log_tol

        lower = 1.5 * ks
        if excess(lower) <= 0.0:
            return lower
        upper = 2.0 * lower
        while excess(upper) > 0.0:
            upper *= 2.0
        return float(brentq(excess, lower, upper, xtol=1e-12 * upper))

    def n_angular(self, medium: ElasticMedium, distance: float, xi_max: float) -> int:
        """角度台形則の点数（8の倍数）"""
        n = max(
            self.min_angular,
            self.angular_per_wavenumber * math.ceil(medium.kappa_s * distance),
            math.ceil(xi_max * distance) + 32,
        )
        return 8 * math.ceil(n / 8)


class GreensParts(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    free: np.ndarray
    image: np.ndarray
    correction: np.ndarray


class GreensResult(BaseModel):
    """半空間グリーンテンソルの値と求積誤差"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    value: np.ndarray = Field(..., description="(3, 3) または (N, 3, 3)")
    error_estimate: float
    parts: Optional[GreensParts] = None


class CorrectionResult(BaseModel):
    """補正項 U の P・S 成分"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    p: np.ndarray = Field(..., description="(N, 3, 3)")
    s: np.ndarray = Field(..., description="(N, 3, 3)")
    error_estimate: float
    xi_max: float
    n_angular: int

    @property
    def total(self) -> np.ndarray:
        return self.p + self.s


class LayerPotentialResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    value: np.ndarray
    truncation_estimate: float


class KupradzeReport(BaseModel):
    """補正項の遠方減衰の診断結果"""
    model_config = ConfigDict(frozen=True)

    radii: List[float]
    norms_p: List[float]
    norms_s: List[float]
    norms_free: List[float]
    slope_p: float
    slope_s: float
    slope_free: float
    axis_gap: float
