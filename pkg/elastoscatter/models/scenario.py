from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from elastoscatter.models.greens import QuadratureConfig
from elastoscatter.models.validation import ALL_GROUPS, CheckGroup

Subcommand = Literal["reflect", "propagate", "greens", "beam", "validate"]
Quantity = Literal["displacement", "traction", "residual"]

# サブコマンドごとに出力できる量
SUPPORTED_OUTPUTS = {
    "reflect": ("displacement", "traction", "residual"),
    "beam": ("displacement", "traction", "residual"),
    "propagate": ("displacement", "traction"),
    "greens": ("displacement", "residual"),
    "validate": (),
}

# サブコマンドが要求する入射の種類
REQUIRED_INCIDENCE = {
    "reflect": "plane",
    "beam": "beam",
    "greens": "point_source",
}


def _listify(v):
    """カンマなしの単一値もリストとして扱う"""
    if v is None or isinstance(v, (list, tuple)):
        return v
    return [v]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)


class MediumSection(_Section):
    lam: float = Field(2.0, alias="lambda")
    mu: float = 1.0
    omega: float = 2.0


class IncidenceSection(_Section):
    """入射場（plane / beam / point_source）"""
    type: Literal["plane", "beam", "point_source"] = "plane"

    # plane
    theta: float = 0.0
    phi: float = 0.0
    c_p: str = "0"
    c_s1: str = "0"
    c_s2: str = "0"
    d1: Optional[List[float]] = None
    d2: Optional[List[float]] = None

    # beam
    kind: Literal["P", "S"] = "P"
    sigma: Optional[float] = None
    center: List[float] = Field(default_factory=lambda: [0.0, 0.0])
    amplitude: str = "1"
    polarization: Optional[List[str]] = None
    support_radius: Optional[float] = None
    reference_height: float = 0.0

    # point_source
    position: Optional[List[float]] = None
    direction: List[float] = Field(default_factory=lambda: [0.0, 0.0, 1.0])

    @field_validator("c_p", "c_s1", "c_s2", "amplitude", mode="before")
    @classmethod
    def _as_text(cls, v):
        return str(v)

    @field_validator("polarization", mode="before")
    @classmethod
    def _as_text_list(cls, v):
        v = _listify(v)
        return None if v is None else [str(c) for c in v]

    @field_validator("d1", "d2", "center", "position", "direction", mode="before")
    @classmethod
    def _as_list(cls, v):
        return _listify(v)


class GridSection(_Section):
    """直交格子（extent 0 の軸は resolution 1）"""
    origin: List[float] = Field(default_factory=lambda: [0.0, 0.0, 0.0], min_length=3, max_length=3)
    extents: List[float] = Field(default_factory=lambda: [1.0, 1.0, 0.0], min_length=3, max_length=3)
    resolution: List[int] = Field(default_factory=lambda: [8, 8, 1], min_length=3, max_length=3)


class OutputsSection(_Section):
    quantities: List[Quantity] = Field(default_factory=lambda: ["displacement"])
    fd_step: Optional[float] = Field(None, gt=0.0, description="残差の差分幅（省略時 2π/(50κ_s)）")

    @field_validator("quantities", mode="before")
    @classmethod
    def _as_list(cls, v):
        return _listify(v)


class QuadratureSection(_Section):
    """QuadratureConfig への上書き"""
    tolerance: Optional[float] = Field(None, gt=0.0)
    h_min_factor: Optional[float] = Field(None, gt=0.0)
    min_angular: Optional[int] = None
    angular_per_wavenumber: Optional[int] = None
    max_angular_doublings: Optional[int] = None
    max_subintervals: Optional[int] = None
    angular_method: Optional[Literal["trapezoid", "bessel"]] = None
    beam_tolerance: Optional[float] = Field(None, gt=0.0)

    def to_config(self) -> QuadratureConfig:
        overrides = self.model_dump(exclude_none=True, exclude={"beam_tolerance"})
        return QuadratureConfig(**overrides)


class TraceSection(_Section):
    """propagate 用の準周期トレース"""
    cell_length: float = Field(4.0, gt=0.0)
    n: int = 16
    alpha: List[float] = Field(default_factory=lambda: [0.0, 0.0], min_length=2, max_length=2)
    height: float = 0.0
    heights: List[float] = Field(default_factory=lambda: [0.5, 1.0], description="伝播距離 dz の一覧")
    direction: Literal["up", "down"] = "up"
    evanescent_only: bool = False

    @field_validator("alpha", "heights", mode="before")
    @classmethod
    def _as_list(cls, v):
        return _listify(v)


class ValidateSection(_Section):
    groups: List[CheckGroup] = Field(default_factory=lambda: list(ALL_GROUPS))

    @field_validator("groups", mode="before")
    @classmethod
    def _as_list(cls, v):
        return _listify(v)


class Scenario(_Section):
    """シナリオファイル全体"""
    medium: MediumSection = Field(default_factory=MediumSection)
    incidence: IncidenceSection = Field(default_factory=IncidenceSection)
    grid: GridSection = Field(default_factory=GridSection)
    outputs: OutputsSection = Field(default_factory=OutputsSection)
    quadrature: QuadratureSection = Field(default_factory=QuadratureSection)
    trace: TraceSection = Field(default_factory=TraceSection)
    validate_: ValidateSection = Field(default_factory=ValidateSection, alias="validate")
    seed: int = 0

    def echo(self) -> dict:
        """メタデータ用のエコー"""
        return self.model_dump(mode="json", by_alias=True)
