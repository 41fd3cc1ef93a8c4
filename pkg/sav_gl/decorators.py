import time
from functools import wraps
from typing import Callable, Optional

from .utils.statistics import record_timing


def timed(name: Optional[str] = None):
    """
    计时装饰器，把耗时记到当前运行标识名下

    :param name: 统计名称，默认为函数名
    """

    def decorator(func: Callable):
        label = name or func.__name__

        @wraps(func)
        def wrapper(*args, **kwargs):
            start = time.perf_counter()
            try:
                return func(*args, **kwargs)
            finally:
                record_timing(label, time.perf_counter() - start)

        return wrapper

    return decorator
