"""
异常定义

所有领域异常都继承自 :class:`SavGlError`，并同时继承对应的内置异常，
便于调用方按 ``ValueError`` / ``RuntimeError`` 捕获。命令行根据异常类型映射退出码。
"""

from typing import Any, Dict, Optional

# 命令行退出码
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIGURATION = 2
EXIT_NONCONVERGENCE = 3
EXIT_VERIFICATION = 4


class SavGlError(Exception):
    """SAV-GL 异常基类"""

    exit_code: int = EXIT_FAILURE


class StructuralError(SavGlError, ValueError):
    """结构错误：维度不匹配、G 非对称、非 MRK 结构、缺少稳定性证书等"""


class PreconditionError(SavGlError, ValueError):
    """前置条件不满足：参数越界等"""


class SavBreakdownError(SavGlError, ArithmeticError):
    """SAV 失效：F1 + C0 <= 0 或 z <= 0"""

    def __init__(self, message: str, value: float):
        super().__init__(f"{message} (value={value!r})")
        self.value = value


class NumericalContaminationError(SavGlError, ArithmeticError):
    """逆变换结果存在不可忽略的虚部"""


class SingularSystemError(SavGlError, ArithmeticError):
    """逐模态矩阵或 Z 方程组奇异"""


class StartupRequiredError(SavGlError, RuntimeError):
    """历史值不足，无法外推"""


class NonConvergenceError(SavGlError, RuntimeError):
    """不完全迭代未在最大次数内收敛"""

    exit_code = EXIT_NONCONVERGENCE

    def __init__(
            self,
            message: str,
            stats: Optional[Any] = None,
            step_index: Optional[int] = None,
    ):
        if step_index is not None:
            message = f"{message} at step {step_index}"
        super().__init__(message)
        self.stats = stats
        self.step_index = step_index


class StartupError(NonConvergenceError):
    """非线性起步不动点迭代失败，一般需要更小的时间步长"""


class ConfigurationError(SavGlError, ValueError):
    """配置错误"""

    exit_code = EXIT_CONFIGURATION


class TableauFormatError(ConfigurationError):
    """格式系数文件解析失败"""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class VerificationError(SavGlError):
    """格式证书校验失败"""

    exit_code = EXIT_VERIFICATION

    def __init__(
            self,
            message: str,
            failed: Optional[Dict[str, Any]] = None,
            report: Optional[Any] = None,
    ):
        super().__init__(message)
        self.failed = failed or {}
        self.report = report


def exit_code_for(error: BaseException) -> int:
    """
    返回异常对应的命令行退出码

    :param error: 异常实例
    :return: 退出码
    """
    if isinstance(error, SavGlError):
        return error.exit_code
    return EXIT_FAILURE
