"""
实验室统一的错误类型

所有数值模块抛出的异常都继承自 LabError, 并可以转换为与
OpenAI 风格一致的 ErrorDetail, 供套件运行器记录为 fail 判定。
"""

from typing import Optional

from pydantic import BaseModel, Field


class ErrorDetail(BaseModel):
    """错误详情"""
    message: str = Field(..., description="错误消息")
    type: str = Field(..., description="错误类型")
    param: Optional[str] = Field(None, description="错误参数")
    code: Optional[str] = Field(None, description="错误代码")


class LabError(Exception):
    """所有实验室错误的基类"""

    error_type: str = "lab_error"

    def __init__(
        self,
        message: str,
        param: Optional[str] = None,
        code: Optional[str] = None,
    ):
        super().__init__(message)
        self.message = message
        self.param = param
        self.code = code

    def to_detail(self) -> ErrorDetail:
        return ErrorDetail(
            message=self.message, type=self.error_type, param=self.param, code=self.code
        )


class DegenerateMetricError(LabError, ValueError):
    error_type = "degenerate_metric"


class ChartDomainError(LabError, ValueError):
    error_type = "domain_error"


class InvalidConfigurationError(LabError, ValueError):
    error_type = "invalid_configuration"


class CutLocusError(LabError, ValueError):
    error_type = "cut_locus"


class PoleError(LabError, ValueError):
    error_type = "pole"


class InputError(LabError, ValueError):
    error_type = "input_error"


class PreconditionError(LabError, ValueError):
    error_type = "precondition"


class UnsupportedConfigurationError(LabError, ValueError):
    error_type = "unsupported_configuration"


class NoConvergenceError(LabError, RuntimeError):
    error_type = "no_convergence"


class ConfigValidationError(LabError, ValueError):
    """配置文件校验失败, 携带行号与字段名"""

    error_type = "config_validation"

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        location = f"line {line}" if line is not None else "unknown line"
        if field:
            location += f", field '{field}'"
        super().__init__(f"{location}: {message}", param=field, code=str(line) if line else None)
        self.line = line
        self.field = field
