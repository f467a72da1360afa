import logging
import time
import uuid
from typing import Callable

from elastoscatter.config.logging_config import get_run_logger

logger = logging.getLogger("elastoscatter.middleware")


class LoggingMiddleware:
    """サブコマンド実行のログ記録ミドルウェア"""

    def __init__(self, subcommand: str):
        self.subcommand = subcommand
        # 実行IDを生成
        self.run_id = str(uuid.uuid4())[:8]

    def dispatch(self, call_next: Callable[[str], int]) -> int:
        """call_next(run_id) を実行し、終了コードを返す"""
        start_time = time.time()
        run_logger = get_run_logger()

        logger.info(
            f"Run started: {self.subcommand}",
            extra={"run_id": self.run_id, "subcommand": self.subcommand}
        )

        try:
            exit_code = call_next(self.run_id)

            # 処理時間を計算
            process_time = time.time() - start_time

            run_logger.info(f"{self.subcommand} exit={exit_code} {process_time:.3f}s [{self.run_id}]")
            logger.info(
                f"Run completed: exit code {exit_code}",
                extra={
                    "run_id": self.run_id,
                    "subcommand": self.subcommand,
                    "exit_code": exit_code,
                    "elapsed_ms": round(process_time * 1000, 2)
                }
            )
            return exit_code

        except Exception as e:
            process_time = time.time() - start_time

            logger.error(
                f"Run failed: {str(e)}",
                extra={
                    "run_id": self.run_id,
                    "subcommand": self.subcommand,
                    "elapsed_ms": round(process_time * 1000, 2)
                },
                exc_info=True
            )
            run_logger.error(f"{self.subcommand} FAILED {process_time:.3f}s [{self.run_id}] ERROR: {str(e)}")

            # 例外を再発生
            raise
