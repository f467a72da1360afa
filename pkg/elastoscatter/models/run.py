from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from elastoscatter.models.medium import ElasticMedium
from elastoscatter.models.scenario import Scenario


class RunContext(BaseModel):
    """1回の CLI 実行の環境"""
    model_config = ConfigDict(frozen=True)

    run_id: str
    out_dir: Path
    format: Literal["binary", "text"] = "binary"
    threads: int = Field(1, ge=1)


class PreparedRun(BaseModel):
    """出力ディレクトリ作成前に構築・検査済みの入力"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    scenario: Scenario
    medium: ElasticMedium
    points: Optional[np.ndarray] = Field(None, description="出力格子 (N, 3)")
    payload: Dict[str, Any] = Field(default_factory=dict)


class CommandOutput(BaseModel):
    """サブコマンドの結果"""
    files: List[str] = Field(default_factory=list)
    metadata: Dict[str, Any] = Field(default_factory=dict)
    exit_code: int = 0
