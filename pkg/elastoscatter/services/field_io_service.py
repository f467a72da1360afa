import json
import logging
import platform
from pathlib import Path
from typing import Any, Dict, Literal, Tuple

import numpy as np
import psutil
import pydantic
import scipy

from elastoscatter import __version__

logger = logging.getLogger(__name__)

OutputFormat = Literal["binary", "text"]

# 1レコード = 座標3 + (Re, Im)×3
RECORD_COLUMNS = ["x1", "x2", "x3", "re_u1", "im_u1", "re_u2", "im_u2", "re_u3", "im_u3"]
EXTENSIONS = {"binary": ".bin", "text": ".txt"}


class FieldIOService:
    """場データ・メタデータのファイル入出力"""

    @staticmethod
    def records(points: np.ndarray, values: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        values = np.asarray(values, dtype=complex).reshape(-1, 3)
        interleaved = np.stack([values.real, values.imag], axis=-1).reshape(-1, 6)
        return np.concatenate([points, interleaved], axis=-1)

    def write_field(self, out_dir: Path, name: str, points: np.ndarray, values: np.ndarray, fmt: OutputFormat = "binary") -> str:
        """1点1レコードで書き出し、ファイル名を返す"""
        if fmt not in EXTENSIONS:
            raise ValueError(f"Unknown output format: {fmt}")
        filename = name + EXTENSIONS[fmt]
        path = Path(out_dir) / filename
        data = self.records(points, values)

        if fmt == "binary":
            np.ascontiguousarray(data, dtype="<f8").tofile(path)
        else:
            np.savetxt(path, data, fmt="%.16e", delimiter=" ")

        logger.info(f"Field written: {filename}", extra={"n_points": len(data)})
        return filename

    @staticmethod
    def read_field(path: Path) -> Tuple[np.ndarray, np.ndarray]:
        """(points, values) を読み戻す"""
        path = Path(path)
        if path.suffix == EXTENSIONS["binary"]:
            data = np.fromfile(path, dtype="<f8").reshape(-1, len(RECORD_COLUMNS))
        else:
            data = np.loadtxt(path, ndmin=2)
        points = data[:, :3]
        values = data[:, 3::2] + 1j * data[:, 4::2]
        return points, values

    @staticmethod
    def write_json(out_dir: Path, filename: str, payload: Dict[str, Any]) -> str:
        path = Path(out_dir) / filename
        path.write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        return filename

    @staticmethod
    def versions() -> Dict[str, str]:
        return {
            "elastoscatter": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pydantic": pydantic.VERSION,
        }

    @staticmethod
    def process_memory_mb() -> float:
        """実行終了時の常駐メモリ（RSS）"""
        return round(psutil.Process().memory_info().rss / 1024 / 1024, 2)

    @staticmethod
    def record_layout(fmt: OutputFormat) -> Dict[str, Any]:
        return {
            "format": fmt,
            "columns": RECORD_COLUMNS,
            "dtype": "little-endian float64" if fmt == "binary" else "text, 17 significant digits",
            "units": "lengths in the same unit as 1/kappa; displacement per unit source amplitude",
        }


# グローバルインスタンス
field_io_service = FieldIOService()
