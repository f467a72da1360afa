from collections import OrderedDict
from datetime import datetime
from typing import Any, Dict, Optional
import hashlib
import json
import logging
import threading

from elastoscatter.config.settings import settings

logger = logging.getLogger(__name__)


class CacheService:
    """インメモリキャッシュサービス（グリッドごとの核行列）"""

    def __init__(self, max_entries: Optional[int] = None):
        self._cache: "OrderedDict[str, Dict[str, Any]]" = OrderedDict()
        self._max_entries = max_entries or settings.kernel_cache_max_entries
        self._hits = 0
        self._misses = 0
        self._lock = threading.Lock()

    def _generate_key(self, prefix: str, **kwargs) -> str:
        """キャッシュキーを生成"""
        key_data = json.dumps(kwargs, sort_keys=True, default=repr)
        hash_object = hashlib.md5(key_data.encode())
        return f"{prefix}:{hash_object.hexdigest()}"

    def _evict(self):
        """上限を超えた古いエントリを削除"""
        evicted = 0
        while len(self._cache) > self._max_entries:
            self._cache.popitem(last=False)
            evicted += 1
        if evicted:
            logger.debug(f"Evicted {evicted} cache entries")

    def get(self, prefix: str, **kwargs) -> Optional[Any]:
        """キャッシュからデータを取得"""
        key = self._generate_key(prefix, **kwargs)

        with self._lock:
            entry = self._cache.get(key)
            if entry is not None:
                self._cache.move_to_end(key)
                self._hits += 1
            else:
                self._misses += 1

        if entry is not None:
            logger.debug(f"Cache hit for key: {key}")
            return entry["data"]

        logger.debug(f"Cache miss for key: {key}")
        return None

    def set(self, prefix: str, data: Any, **kwargs):
        """キャッシュにデータを保存"""
        key = self._generate_key(prefix, **kwargs)
        with self._lock:
            self._cache[key] = {
                "data": data,
                "created_at": datetime.now()
            }
            self._cache.move_to_end(key)
            self._evict()
        logger.debug(f"Cache set for key: {key}")

    def clear(self, prefix: Optional[str] = None):
        """キャッシュをクリア"""
        if prefix:
            with self._lock:
                keys_to_delete = [k for k in self._cache.keys() if k.startswith(f"{prefix}:")]
                for key in keys_to_delete:
                    del self._cache[key]
            logger.debug(f"Cleared {len(keys_to_delete)} cache entries with prefix: {prefix}")
        else:
            with self._lock:
                self._cache.clear()
            logger.debug("Cleared all cache entries")

    def get_stats(self) -> Dict[str, Any]:
        """キャッシュ統計を取得"""
        prefixes: Dict[str, int] = {}
        for key in self._cache.keys():
            prefix = key.split(':')[0]
            prefixes[prefix] = prefixes.get(prefix, 0) + 1

        return {
            'total_entries': len(self._cache),
            'max_entries': self._max_entries,
            'hits': self._hits,
            'misses': self._misses,
            'entries_by_prefix': prefixes
        }

    # グリッド核行列用の便利メソッド
    def get_grid_kernels(self, medium_key: dict, cell_length: float, n: int, alpha) -> Optional[Any]:
        """グリッド核行列キャッシュを取得"""
        return self.get("grid_kernels", medium=medium_key, cell_length=cell_length, n=n, alpha=list(alpha))

    def set_grid_kernels(self, medium_key: dict, cell_length: float, n: int, alpha, data: Any):
        """グリッド核行列キャッシュを設定"""
        self.set("grid_kernels", data, medium=medium_key, cell_length=cell_length, n=n, alpha=list(alpha))


# グローバルインスタンス
cache_service = CacheService()
