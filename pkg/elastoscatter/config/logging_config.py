import logging
import logging.config
import logging.handlers
import os
import sys
from datetime import datetime, timezone
from typing import Any, Dict

from elastoscatter.config.settings import settings

# 構造化ログに載せる追加属性
_EXTRA_FIELDS = (
    "run_id",
    "subcommand",
    "check",
    "group",
    "n_points",
    "n_pairs",
    "elapsed_ms",
    "error_estimate",
    "exit_code",
)


class CustomFormatter(logging.Formatter):
    """カスタムログフォーマッター（構造化ログ対応）"""

    def format(self, record):
        log_entry = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno
        }

        # 例外情報があれば追加
        if record.exc_info:
            log_entry["exception"] = self.formatException(record.exc_info)

        for field in _EXTRA_FIELDS:
            if hasattr(record, field):
                log_entry[field] = getattr(record, field)

        return str(log_entry)


def setup_logging() -> None:
    """ログ設定を初期化"""

    log_level = settings.log_level.upper()
    debug_mode = settings.debug
    log_dir = settings.log_dir

    handlers: Dict[str, Any] = {
        "console": {
            "class": "logging.StreamHandler",
            "level": log_level,
            "formatter": "detailed" if debug_mode else "simple",
            "stream": sys.stderr
        }
    }
    package_handlers = ["console"]

    if settings.log_to_file:
        os.makedirs(log_dir, exist_ok=True)
        handlers["file"] = {
            "class": "logging.handlers.RotatingFileHandler",
            "level": "INFO",
            "formatter": "detailed" if debug_mode else "json",
            "filename": os.path.join(log_dir, "elastoscatter.log"),
            "maxBytes": 10485760,  # 10MB
            "backupCount": 5,
            "encoding": "utf8"
        }
        handlers["error_file"] = {
            "class": "logging.handlers.RotatingFileHandler",
            "level": "ERROR",
            "formatter": "detailed" if debug_mode else "json",
            "filename": os.path.join(log_dir, "error.log"),
            "maxBytes": 10485760,  # 10MB
            "backupCount": 5,
            "encoding": "utf8"
        }
        package_handlers += ["file", "error_file"]

    config: Dict[str, Any] = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "detailed": {
                "format": "%(asctime)s | %(levelname)-8s | %(name)-20s | %(funcName)-15s:%(lineno)-4d | %(message)s",
                "datefmt": "%Y-%m-%d %H:%M:%S"
            },
            "simple": {
                "format": "%(levelname)s: %(message)s"
            },
            "json": {
                "()": CustomFormatter
            }
        },
        "handlers": handlers,
        "loggers": {
            "elastoscatter": {
                "level": log_level,
                "handlers": package_handlers,
                "propagate": False
            }
        },
        "root": {
            "level": "WARNING",
            "handlers": ["console"]
        }
    }

    logging.config.dictConfig(config)

    logger = logging.getLogger("elastoscatter.config")
    logger.debug(f"Logging configured - Level: {log_level}, Debug: {debug_mode}, File: {settings.log_to_file}")


def get_run_logger() -> logging.Logger:
    """実行ログ用のロガーを取得"""
    run_logger = logging.getLogger("elastoscatter.runs")

    # ファイル出力が有効な場合のみ専用ハンドラーを追加
    if settings.log_to_file and not run_logger.handlers:
        os.makedirs(settings.log_dir, exist_ok=True)
        handler = logging.handlers.RotatingFileHandler(
            os.path.join(settings.log_dir, "runs.log"),
            maxBytes=10485760,  # 10MB
            backupCount=5,
            encoding="utf8"
        )
        formatter = logging.Formatter(
            "%(asctime)s | %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S"
        )
        handler.setFormatter(formatter)
        run_logger.addHandler(handler)
        run_logger.setLevel(logging.INFO)

    return run_logger
