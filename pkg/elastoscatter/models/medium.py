import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class ElasticMedium(BaseModel):
    """等方弾性媒質と導出波数"""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lam: float = Field(..., alias="lambda", description="第一ラメ定数 λ")
    mu: float = Field(..., description="せん断弾性率 μ")
    omega: float = Field(..., description="角周波数 ω")
    kappa_p: float = Field(..., description="縦波波数 κ_p")
    kappa_s: float = Field(..., description="横波波数 κ_s")

    @property
    def p_modulus(self) -> float:
        """λ+2μ"""
        return self.lam + 2.0 * self.mu

    def cache_key(self) -> dict:
        return {"lambda": self.lam, "mu": self.mu, "omega": self.omega}


class SpectralSymbols(BaseModel):
    """水平波数ごとの鉛直波数 β, γ と分母 βγ+|ξ|²"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    xi: np.ndarray = Field(..., description="水平波数 (..., 2)")
    beta: np.ndarray = Field(..., description="縦波の鉛直波数")
    gamma: np.ndarray = Field(..., description="横波の鉛直波数")
    denom: np.ndarray = Field(..., description="βγ+|ξ|²")

    @field_validator("xi", "beta", "gamma", "denom", mode="before")
    @classmethod
    def _as_array(cls, v):
        # 0-d の ξ では numpy スカラーになる
        return np.asarray(v)

    @property
    def xi_norm2(self) -> np.ndarray:
        return self.xi[..., 0] ** 2 + self.xi[..., 1] ** 2
