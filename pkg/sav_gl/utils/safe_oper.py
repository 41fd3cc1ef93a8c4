from typing import Callable, TypeVar

import numpy as np
from loguru import logger

from ..errors import SingularSystemError

T = TypeVar('T')


def guarded_linalg(operation: Callable[[], T], operation_name: str) -> T:
    """
    线性代数操作包装器

    把 LinAlgError 和非有限结果统一转换为 :class:`SingularSystemError` 并记录日志。

    :param operation: 无参的线性代数操作
    :param operation_name: 操作名称（用于日志）
    :return: 操作结果
    :raises SingularSystemError: 矩阵奇异或结果含 nan/inf
    """
    try:
        result = operation()
    except np.linalg.LinAlgError as e:
        logger.error(f"{operation_name} failed: {e}")
        raise SingularSystemError(f"{operation_name} is singular: {e}") from e
    if not np.all(np.isfinite(result)):
        logger.error(f"{operation_name} produced non-finite values")
        raise SingularSystemError(f"{operation_name} produced non-finite values")
    return result
