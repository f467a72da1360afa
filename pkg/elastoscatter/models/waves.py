from typing import Callable, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# 偏光ベクトルの単位性・直交性の許容誤差
POLARIZATION_TOLERANCE = 1e-10


def _to_complex(v) -> complex:
    if isinstance(v, str):
        return complex(v.replace(" ", "").replace("i", "j"))
    return complex(v)


class PlaneWaveSpec(BaseModel):
    """下向き平面波（P 波と2つの S 偏光の重ね合わせ）"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    theta: float = Field(0.0, ge=0.0, lt=np.pi / 2, description="入射角 θ")
    phi: float = Field(0.0, ge=0.0, lt=2.0 * np.pi, description="方位角 φ")
    c_p: complex = Field(0j, description="P 波の係数")
    c_s1: complex = Field(0j, description="S 波（d₁⊥）の係数")
    c_s2: complex = Field(0j, description="S 波（d₂⊥）の係数")
    d1: Optional[Tuple[float, float, float]] = Field(None, description="S 偏光 d₁⊥（省略時は既定値）")
    d2: Optional[Tuple[float, float, float]] = Field(None, description="S 偏光 d₂⊥（省略時は既定値）")

    @field_validator("c_p", "c_s1", "c_s2", mode="before")
    @classmethod
    def _complex(cls, v):
        return _to_complex(v)

    @model_validator(mode="after")
    def _check_polarizations(self):
        d = self.direction()
        for name, v in zip(("d1", "d2"), self.s_polarizations()):
            if abs(np.linalg.norm(v) - 1.0) > POLARIZATION_TOLERANCE:
                raise ValueError(f"{name} must be a unit vector")
            if abs(np.dot(v, d)) > POLARIZATION_TOLERANCE:
                raise ValueError(f"{name} must be orthogonal to the propagation direction")
        return self

    def direction(self) -> np.ndarray:
        """d = (sinθcosφ, sinθsinφ, −cosθ)"""
        st, ct = np.sin(self.theta), np.cos(self.theta)
        return np.array([st * np.cos(self.phi), st * np.sin(self.phi), -ct])

    def s_polarizations(self) -> Tuple[np.ndarray, np.ndarray]:
        st, ct = np.sin(self.theta), np.cos(self.theta)
        sp, cp = np.sin(self.phi), np.cos(self.phi)
        d1 = np.array(self.d1, dtype=float) if self.d1 is not None else np.array([ct * cp, ct * sp, st])
        d2 = np.array(self.d2, dtype=float) if self.d2 is not None else np.array([-sp, cp, 0.0])
        return d1, d2

    def components(self):
        """P・S1・S2 成分ごとの仕様に分割"""
        return (
            self.model_copy(update={"c_s1": 0j, "c_s2": 0j}),
            self.model_copy(update={"c_p": 0j, "c_s2": 0j}),
            self.model_copy(update={"c_p": 0j, "c_s1": 0j}),
        )


class GaussianDensity(BaseModel):
    """ξ₀ まわりの正規化ガウス型スペクトル密度（質量 = amplitude）"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    center: Tuple[float, float] = (0.0, 0.0)
    sigma: float = Field(..., gt=0.0)
    amplitude: complex = Field(1 + 0j, description="P ビームのスカラー振幅")
    polarization: Optional[np.ndarray] = Field(None, description="S ビームの複素3次元ベクトル q")

    @field_validator("amplitude", mode="before")
    @classmethod
    def _complex(cls, v):
        return _to_complex(v)

    @field_validator("polarization", mode="before")
    @classmethod
    def _vector(cls, v):
        if v is None:
            return None
        v = np.asarray([_to_complex(c) for c in v], dtype=complex)
        if v.shape != (3,):
            raise ValueError("polarization must have three components")
        return v

    def __call__(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        r2 = np.sum((xi - np.asarray(self.center)) ** 2, axis=-1)
        weight = np.exp(-0.5 * r2 / self.sigma ** 2) / (2.0 * np.pi * self.sigma ** 2)
        if self.polarization is None:
            return self.amplitude * weight
        return weight[..., None] * self.polarization


class SpectralBeamSpec(BaseModel):
    """コンパクト台のスペクトル密度で重ね合わせた下向きビーム"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: Literal["P", "S"]
    density: Callable[[np.ndarray], np.ndarray] = Field(..., description="P: ξ → g, S: ξ → q")
    support_center: Tuple[float, float] = (0.0, 0.0)
    support_radius: float = Field(..., gt=0.0)
    reference_height: float = Field(0.0, description="位相 e^{iβb} の b")


# 位相行列 (点数 × モード数) の要素数の上限
PHASE_BLOCK_ENTRIES = 1 << 21


class ModeSuperposition(BaseModel):
    """指数モード Σ a_j e^{ik_j·x} の有限和"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    wavevectors: np.ndarray = Field(..., description="(N, 3) complex")
    amplitudes: np.ndarray = Field(..., description="(N, 3) complex")

    @field_validator("wavevectors", "amplitudes", mode="before")
    @classmethod
    def _as_modes(cls, v):
        v = np.asarray(v, dtype=complex)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"expected shape (N, 3), got {v.shape}")
        return v

    @model_validator(mode="after")
    def _same_length(self):
        if self.wavevectors.shape != self.amplitudes.shape:
            raise ValueError("wavevectors and amplitudes must have the same shape")
        return self

    def __add__(self, other: "ModeSuperposition") -> "ModeSuperposition":
        return ModeSuperposition(
            wavevectors=np.concatenate([self.wavevectors, other.wavevectors]),
            amplitudes=np.concatenate([self.amplitudes, other.amplitudes]),
        )

    def phases(self, points: np.ndarray) -> np.ndarray:
        """e^{ik_j·x} (M, N)"""
        return np.exp(1j * np.asarray(points, dtype=float) @ self.wavevectors.T)

    def evaluate(self, x, chunk_size: int = 256) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        points = x.reshape(-1, 3)
        out = np.empty((points.shape[0], 3), dtype=complex)
        chunk_size = max(1, min(chunk_size, PHASE_BLOCK_ENTRIES // max(1, len(self.wavevectors))))
        for start in range(0, points.shape[0], chunk_size):
            out[start:start + chunk_size] = self.phases(points[start:start + chunk_size]) @ self.amplitudes
        return out.reshape(x.shape[:-1] + (3,))


class BeamEvaluation(BaseModel):
    """ビーム求積の結果"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    value: np.ndarray
    error_estimate: float
    n_radial: int
    n_angular: int
