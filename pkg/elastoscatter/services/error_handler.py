import logging
from typing import Any, Dict, Optional

from pydantic import ValidationError

from elastoscatter.models.errors import (
    CoincidentPointsError,
    ElastoScatterError,
    ErrorCode,
    ErrorDetail,
    InvariantViolationError,
    ParameterDomainError,
    QuadratureError,
    RunError,
    ScenarioParseError,
)

logger = logging.getLogger(__name__)

# 終了コード
EXIT_SUCCESS = 0
EXIT_FAILURE = 1
EXIT_PARSE = 2
EXIT_INVARIANT = 3
EXIT_QUADRATURE = 4


def _validation_details(e: ValidationError) -> Dict[str, Any]:
    return {
        "errors": [
            {"loc": ".".join(str(part) for part in err["loc"]), "msg": err["msg"]}
            for err in e.errors()
        ]
    }


class ErrorHandler:
    """例外を ErrorDetail と終了コードに変換するクラス"""

    @staticmethod
    def handle_parse_error(e: Exception) -> RunError:
        """シナリオの構文・スキーマエラー"""
        code = ErrorCode.SCENARIO_PARSE
        if isinstance(e, ValidationError):
            details = _validation_details(e)
            message = "シナリオの値が不正です"
        else:
            details = getattr(e, "details", None) or {"error": str(e)}
            message = getattr(e, "message", str(e))
            code = getattr(e, "code", None) or code
        logger.warning(f"Scenario rejected: {e}")
        return RunError(
            error=ErrorDetail(code=code, message=message, details=details),
            exit_code=EXIT_PARSE,
        )

    @staticmethod
    def handle_invariant_error(e: Exception, details: Optional[Dict] = None) -> RunError:
        """不変条件・定義域違反"""
        if isinstance(e, ValidationError):
            code, message = ErrorCode.INVARIANT_VIOLATION, "ドメインオブジェクトの不変条件に違反しています"
            merged = {**_validation_details(e), **(details or {})}
        else:
            code, message = e.code, e.message
            merged = {**e.details, **(details or {})}
        logger.warning(f"Invariant violation: {message}")
        return RunError(error=ErrorDetail(code=code, message=message, details=merged), exit_code=EXIT_INVARIANT)

    @staticmethod
    def handle_quadrature_error(e: QuadratureError) -> RunError:
        """求積の収束失敗"""
        logger.error(f"Quadrature failure: {e.message}")
        return RunError(
            error=ErrorDetail(code=e.code, message=e.message, details=e.details),
            exit_code=EXIT_QUADRATURE,
        )

    @staticmethod
    def handle_check_failures(n_failed: int, names) -> RunError:
        """検証スイートに失敗が含まれる"""
        return RunError(
            error=ErrorDetail(
                code=ErrorCode.CHECK_FAILED,
                message=f"{n_failed} 件のチェックが失敗しました",
                details={"failed": list(names)},
            ),
            exit_code=EXIT_FAILURE,
        )

    @staticmethod
    def handle_custom_exception(e: Exception) -> RunError:
        """例外の種類に応じて振り分け"""
        if isinstance(e, ScenarioParseError):
            return ErrorHandler.handle_parse_error(e)

        elif isinstance(e, (InvariantViolationError, ParameterDomainError, CoincidentPointsError)):
            return ErrorHandler.handle_invariant_error(e)

        elif isinstance(e, QuadratureError):
            return ErrorHandler.handle_quadrature_error(e)

        elif isinstance(e, ElastoScatterError):
            logger.error(f"Library error: {e.message}")
            return RunError(
                error=ErrorDetail(code=e.code, message=e.message, details=e.details),
                exit_code=EXIT_FAILURE,
            )

        else:
            logger.error(f"Unhandled exception: {e}", exc_info=True)
            return RunError(
                error=ErrorDetail(
                    code=ErrorCode.INTERNAL,
                    message="予期しないエラーが発生しました",
                    details={"error": str(e), "type": type(e).__name__},
                ),
                exit_code=EXIT_FAILURE,
            )


# グローバルインスタンス
error_handler = ErrorHandler()
