from enum import Enum
from typing import Any, Dict, Optional

from pydantic import BaseModel


class ErrorCode(str, Enum):
    PARAMETER_DOMAIN = "PARAMETER_DOMAIN"
    COINCIDENT_POINTS = "COINCIDENT_POINTS"
    SLOW_CONVERGENCE = "SLOW_CONVERGENCE"
    QUADRATURE_NOT_CONVERGED = "QUADRATURE_NOT_CONVERGED"
    SCENARIO_PARSE = "SCENARIO_PARSE"
    INVARIANT_VIOLATION = "INVARIANT_VIOLATION"
    UNSUPPORTED_OUTPUT = "UNSUPPORTED_OUTPUT"
    CHECK_FAILED = "CHECK_FAILED"
    INTERNAL = "INTERNAL"


class ErrorDetail(BaseModel):
    code: ErrorCode
    message: str
    details: Optional[Dict[str, Any]] = None


class RunError(BaseModel):
    error: ErrorDetail
    exit_code: int


class ElastoScatterError(Exception):
    """ライブラリ共通の基底例外"""
    default_code = ErrorCode.INTERNAL

    def __init__(self, message: str, code: Optional[ErrorCode] = None, details: Optional[Dict] = None):
        self.message = message
        self.code = code or self.default_code
        self.details = details or {}
        super().__init__(message)


class ParameterDomainError(ElastoScatterError):
    """物理パラメータや引数が定義域外"""
    default_code = ErrorCode.PARAMETER_DOMAIN


class CoincidentPointsError(ElastoScatterError):
    """観測点とソース点が一致"""
    default_code = ErrorCode.COINCIDENT_POINTS


class QuadratureError(ElastoScatterError):
    """数値積分が許容誤差を満たせない"""
    default_code = ErrorCode.QUADRATURE_NOT_CONVERGED


class ScenarioParseError(ElastoScatterError):
    """シナリオファイルの構文・スキーマエラー"""
    default_code = ErrorCode.SCENARIO_PARSE


class InvariantViolationError(ElastoScatterError):
    """シナリオの不変条件違反"""
    default_code = ErrorCode.INVARIANT_VIOLATION
