import os

import psutil
from pydantic_settings import BaseSettings


def _default_threads() -> int:
    """物理コア数（取得できない場合は1）"""
    return psutil.cpu_count(logical=False) or 1


class Settings(BaseSettings):
    # Environment
    environment: str = os.getenv("ENVIRONMENT", "development")

    # アプリ情報
    app_name: str = "elastoscatter"
    app_description: str = "弾性半空間の散乱カーネルと検証スイート"

    # Logging設定
    log_level: str = os.getenv("LOG_LEVEL", "INFO")
    log_dir: str = os.getenv("LOG_DIR", "logs")
    log_to_file: bool = os.getenv("LOG_TO_FILE", "False").lower() == "true"
    debug: bool = os.getenv("DEBUG", "False").lower() == "true"

    # 実行設定
    default_threads: int = int(os.getenv("DEFAULT_THREADS", str(_default_threads())))
    default_output_format: str = os.getenv("DEFAULT_OUTPUT_FORMAT", "binary")
    evaluation_chunk_size: int = int(os.getenv("EVALUATION_CHUNK_SIZE", "256"))

    # 数値設定
    quadrature_tolerance: float = float(os.getenv("QUADRATURE_TOLERANCE", "1e-8"))
    beam_tolerance: float = float(os.getenv("BEAM_TOLERANCE", "1e-8"))
    beam_max_doublings: int = int(os.getenv("BEAM_MAX_DOUBLINGS", "5"))
    fd_points_per_wavelength: int = int(os.getenv("FD_POINTS_PER_WAVELENGTH", "50"))
    flux_trace_count: int = int(os.getenv("FLUX_TRACE_COUNT", "50"))

    # Cache設定
    kernel_cache_max_entries: int = int(os.getenv("KERNEL_CACHE_MAX_ENTRIES", "64"))

    class Config:
        env_file = ".env"


# 環境に応じた設定ファイルを選択
def get_env_file():
    env = os.getenv("ENVIRONMENT", "development").lower()
    env_files = {
        "production": ".env.prod",
        "development": ".env.dev",
        "test": ".env.test"
    }
    return env_files.get(env, ".env")


# 設定を初期化
class EnvironmentSettings(Settings):
    class Config:
        env_file = get_env_file()


settings = EnvironmentSettings()
