from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class KernelMatrices(BaseModel):
    """水平波数ごとのスペクトル核行列（先頭次元は ξ の形状）"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    xi: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    denom: np.ndarray
    Dtilde: np.ndarray = Field(..., description="4×4")
    D: np.ndarray = Field(..., description="4×3")
    M_p: np.ndarray
    M_s: np.ndarray
    M_p_down: np.ndarray
    M_s_down: np.ndarray
    G: np.ndarray = Field(..., description="3×4 traction matrix")
    M: np.ndarray = Field(..., description="upward DtN symbol")
    M_minus: np.ndarray = Field(..., description="downward DtN symbol")
    V: np.ndarray
    Mtilde_p: np.ndarray
    Mtilde_s: np.ndarray
    T_p: np.ndarray
    T_s: np.ndarray

    @field_validator("*", mode="before")
    @classmethod
    def _as_array(cls, v):
        return np.asarray(v)


class TraceGrid(BaseModel):
    """水平面 x₃=b 上の周期セルでサンプルした複素3成分場"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    cell_length: float = Field(..., gt=0.0, description="周期 L")
    n: int = Field(..., ge=2, description="一方向のサンプル数（2のべき）")
    alpha: Tuple[float, float] = Field((0.0, 0.0), description="準周期の位相シフト")
    height: float = Field(0.0, description="面の高さ b")
    values: np.ndarray = Field(..., description="(n, n, 3) complex")

    @field_validator("n")
    @classmethod
    def _power_of_two(cls, v: int) -> int:
        if v & (v - 1):
            raise ValueError(f"n must be a power of two, got {v}")
        return v

    @field_validator("values", mode="before")
    @classmethod
    def _as_complex(cls, v):
        return np.asarray(v, dtype=complex)

    @model_validator(mode="after")
    def _check_shape(self):
        if self.values.shape != (self.n, self.n, 3):
            raise ValueError(f"values must have shape ({self.n}, {self.n}, 3), got {self.values.shape}")
        return self

    @property
    def spacing(self) -> float:
        return self.cell_length / self.n

    @property
    def mode_spacing(self) -> float:
        """Δξ = (2π/L)²"""
        return (2.0 * np.pi / self.cell_length) ** 2

    def coordinates(self) -> np.ndarray:
        """サンプル点 x' (n, n, 2)"""
        x = np.arange(self.n) * self.spacing
        x1, x2 = np.meshgrid(x, x, indexing="ij")
        return np.stack([x1, x2], axis=-1)

    def mode_indices(self) -> np.ndarray:
        """fftfreq 順の整数モード番号 (n, n, 2)"""
        m = np.fft.fftfreq(self.n, d=1.0 / self.n)
        m1, m2 = np.meshgrid(m, m, indexing="ij")
        return np.stack([m1, m2], axis=-1)

    def wavevectors(self) -> np.ndarray:
        """ξ_m = α + 2πm/L (n, n, 2)"""
        return np.asarray(self.alpha, dtype=float) + 2.0 * np.pi / self.cell_length * self.mode_indices()

    def nyquist_mask(self) -> np.ndarray:
        m = self.mode_indices()
        return (m[..., 0] == -self.n // 2) | (m[..., 1] == -self.n // 2)

    def with_values(self, values: np.ndarray, height: float = None) -> "TraceGrid":
        return TraceGrid(
            cell_length=self.cell_length,
            n=self.n,
            alpha=self.alpha,
            height=self.height if height is None else height,
            values=values,
        )


class SpectralDecomposition(BaseModel):
    """モードごとの P 振幅 A_p と S 振幅 A_s"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    xi: np.ndarray = Field(..., description="(n, n, 2)")
    beta: np.ndarray
    gamma: np.ndarray
    A_p: np.ndarray = Field(..., description="(n, n)")
    A_s: np.ndarray = Field(..., description="(n, n, 3)")
    mode_spacing: float

    def p_vectors(self) -> np.ndarray:
        """A_p (ξ, β)"""
        k = np.concatenate([self.xi + 0j, self.beta[..., None]], axis=-1)
        return self.A_p[..., None] * k


class RayleighCoefficients(BaseModel):
    """準双周期場の上向き Rayleigh 展開係数"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    alpha_n: np.ndarray = Field(..., description="(n, n, 2) モード波数")
    beta_n: np.ndarray
    gamma_n: np.ndarray
    u_n: np.ndarray = Field(..., description="(n, n, 3) Fourier 係数")
    A_p: np.ndarray
    A_s: np.ndarray
    height: float


class HelmholtzPotentials(BaseModel):
    """モードごとのスカラー・ベクトルポテンシャル係数"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    phi: np.ndarray = Field(..., description="(n, n)")
    psi: np.ndarray = Field(..., description="(n, n, 3)")


class SurfaceFields(BaseModel):
    """面上の変位・勾配・トラクション（スペクトル微分で評価）"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    u: np.ndarray = Field(..., description="(n, n, 3)")
    grad: np.ndarray = Field(..., description="(3, n, n, 3)  grad[k][..., j] = ∂_k u_j")
    traction: np.ndarray = Field(..., description="(n, n, 3)")
    cell_area: float = Field(..., description="(L/n)²")
