import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Optional

import numpy as np

from elastoscatter.config.settings import settings
from elastoscatter.models.errors import InvariantViolationError
from elastoscatter.models.scenario import GridSection

logger = logging.getLogger(__name__)

PointFunction = Callable[[np.ndarray], np.ndarray]


class GridService:
    """出力格子の生成と点ごとの並列評価"""

    @staticmethod
    def check_grid(grid: GridSection):
        """extent > 0 の軸は resolution ≥ 2、extent = 0 の軸は resolution = 1"""
        for axis, (extent, resolution) in enumerate(zip(grid.extents, grid.resolution)):
            details = {"axis": axis + 1, "extent": extent, "resolution": resolution}
            if not np.isfinite(extent) or extent < 0.0:
                raise InvariantViolationError("Grid extents must be finite and non-negative", details=details)
            if extent > 0.0 and resolution < 2:
                raise InvariantViolationError("A sampled grid axis needs resolution >= 2", details=details)
            if extent == 0.0 and resolution != 1:
                raise InvariantViolationError("A collapsed grid axis needs resolution 1", details=details)

    def points(self, grid: GridSection) -> np.ndarray:
        """格子点 (N, 3)、x₁ が最も速く変化する順"""
        self.check_grid(grid)
        axes = [
            origin + extent * np.arange(resolution) / max(resolution - 1, 1)
            for origin, extent, resolution in zip(grid.origin, grid.extents, grid.resolution)
        ]
        x3, x2, x1 = np.meshgrid(axes[2], axes[1], axes[0], indexing="ij")
        return np.stack([x1, x2, x3], axis=-1).reshape(-1, 3)

    @staticmethod
    def geometry(grid: GridSection) -> Dict:
        return {
            "origin": list(grid.origin),
            "extents": list(grid.extents),
            "resolution": list(grid.resolution),
            "n_points": int(np.prod(grid.resolution)),
            "ordering": "x1 fastest, then x2, then x3",
        }

    def map_chunks(
        self,
        fn: PointFunction,
        points: np.ndarray,
        threads: int = 1,
        chunk_size: Optional[int] = None,
    ) -> np.ndarray:
        """固定サイズのチャンクに分けて評価（結果はスレッド数に依存しない）"""
        chunk_size = chunk_size or settings.evaluation_chunk_size
        chunks = [points[start:start + chunk_size] for start in range(0, len(points), chunk_size)]
        logger.debug(f"Evaluating {len(points)} points in {len(chunks)} chunks on {threads} threads",
                     extra={"n_points": len(points)})
        if not chunks:
            return np.zeros((0, 3), dtype=complex)
        with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
            results = list(executor.map(fn, chunks))
        return np.concatenate([np.asarray(r, dtype=complex).reshape(-1, 3) for r in results])


# グローバルインスタンス
grid_service = GridService()
