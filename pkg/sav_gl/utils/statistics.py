"""
运行统计模块

按运行标识记录步数、级方程迭代次数、最终残差和各阶段耗时，线程安全。
当前运行标识保存在 contextvars 中，由实验驱动在每条轨道开始时设置。
"""

import threading
from collections import defaultdict
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from loguru import logger

_current_run: ContextVar[Optional[str]] = ContextVar("sav_gl_current_run", default=None)


@dataclass
class RunStatistics:
    """单次运行的统计信息"""
    steps: int = 0
    total_iterations: int = 0
    max_iterations: int = 0
    max_residual: float = 0.0
    timings: Dict[str, float] = field(default_factory=lambda: defaultdict(float))
    calls: Dict[str, int] = field(default_factory=lambda: defaultdict(int))

    @property
    def avg_iterations(self) -> float:
        if self.steps == 0:
            return 0.0
        return self.total_iterations / self.steps

    @property
    def wall_time(self) -> float:
        return sum(self.timings.values())

    def reset(self):
        self.steps = 0
        self.total_iterations = 0
        self.max_iterations = 0
        self.max_residual = 0.0
        self.timings.clear()
        self.calls.clear()


class RunStatisticsManager:
    """运行统计管理器"""

    def __init__(self):
        self._statistics: Dict[str, RunStatistics] = defaultdict(RunStatistics)
        self._lock = threading.RLock()

    def record_stage_solve(self, run_id: str, iterations: int, residual: float):
        """记录一次级方程求解"""
        with self._lock:
            stats = self._statistics[run_id]
            stats.steps += 1
            stats.total_iterations += iterations
            stats.max_iterations = max(stats.max_iterations, iterations)
            stats.max_residual = max(stats.max_residual, residual)

    def record_timing(self, run_id: str, name: str, elapsed: float):
        """记录一次耗时"""
        with self._lock:
            stats = self._statistics[run_id]
            stats.timings[name] += elapsed
            stats.calls[name] += 1

    def get_statistics(self, run_id: Optional[str] = None) -> Dict[str, Any]:
        """获取统计信息"""
        with self._lock:
            if run_id is None:
                return {key: self.get_statistics(key) for key in self._statistics.keys()}
            if run_id not in self._statistics:
                return {}
            stats = self._statistics[run_id]
            return {
                "run_id": run_id,
                "steps": stats.steps,
                "total_iterations": stats.total_iterations,
                "max_iterations": stats.max_iterations,
                "avg_iterations": round(stats.avg_iterations, 6),
                "max_residual": stats.max_residual,
                "wall_time": round(stats.wall_time, 6),
                "timings": {name: round(value, 6) for name, value in stats.timings.items()},
                "calls": dict(stats.calls),
            }

    def reset_statistics(self, run_id: Optional[str] = None):
        """重置统计信息"""
        with self._lock:
            if run_id is None:
                self._statistics.clear()
            elif run_id in self._statistics:
                self._statistics[run_id].reset()


# 全局统计管理器实例
_statistics_manager = RunStatisticsManager()


@contextmanager
def run_scope(run_id: str):
    """在上下文内把统计记到 run_id 名下"""
    token = _current_run.set(run_id)
    logger.debug(f"Entering run scope {run_id}")
    try:
        yield run_id
    finally:
        _current_run.reset(token)


def record_stage_solve(iterations: int, residual: float):
    """记录当前运行的一次级方程求解，运行标识未设置时忽略"""
    run_id = _current_run.get()
    if run_id is not None:
        _statistics_manager.record_stage_solve(run_id, iterations, residual)


def record_timing(name: str, elapsed: float):
    """记录当前运行的耗时，运行标识未设置时忽略"""
    run_id = _current_run.get()
    if run_id is not None:
        _statistics_manager.record_timing(run_id, name, elapsed)


def get_run_statistics(run_id: Optional[str] = None) -> Dict[str, Any]:
    """获取运行统计信息"""
    return _statistics_manager.get_statistics(run_id)


def reset_run_statistics(run_id: Optional[str] = None):
    """重置运行统计信息"""
    _statistics_manager.reset_statistics(run_id)
