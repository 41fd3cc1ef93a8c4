"""
诊断量输出

每步的能量、质量差和极值写入 CSV 文件或保存在内存中，快照按配置的格式写文件。
同一个 sink 只由一条轨道使用。
"""

import csv
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from loguru import logger

from .config import OutputConfig
from .stepper import StepDiagnostics
from .utils.run_key import sanitize_stem
from .utils.serializers import FieldSnapshot, get_serializer

ENERGY_COLUMNS = ("step", "t", "energy", "original_energy")
MASS_COLUMNS = ("step", "t", "mass_diff")
EXTREMA_COLUMNS = ("step", "t", "u_max", "u_min")


def _fmt(value) -> str:
    return repr(float(value))


class DiagnosticsSink(ABC):
    """诊断量输出抽象基类"""

    def __init__(self):
        self.mass0: Optional[float] = None

    def record(self, diagnostics: StepDiagnostics):
        """记录一行诊断量，第一行的质量作为基准"""
        if self.mass0 is None:
            self.mass0 = diagnostics.mass
        self._write_row(
            "energy",
            (diagnostics.step_index, diagnostics.time, diagnostics.energy, diagnostics.original_energy),
        )
        self._write_row("mass", (diagnostics.step_index, diagnostics.time, diagnostics.mass - self.mass0))
        self._write_row("extrema", (diagnostics.step_index, diagnostics.time, diagnostics.u_max, diagnostics.u_min))

    @abstractmethod
    def _write_row(self, channel: str, row: tuple):
        pass

    @abstractmethod
    def snapshot(self, time: float, values: np.ndarray, domain_length: float) -> Optional[str]:
        """保存一个快照，返回文件路径（若有）"""
        pass

    def close(self):
        pass

    @property
    def paths(self) -> List[str]:
        return []

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()


class MemoryDiagnosticsSink(DiagnosticsSink):
    """内存输出，用于测试和收敛性研究"""

    def __init__(self):
        super().__init__()
        self.rows: Dict[str, List[tuple]] = {"energy": [], "mass": [], "extrema": []}
        self.snapshots: List[FieldSnapshot] = []

    def _write_row(self, channel: str, row: tuple):
        self.rows[channel].append(tuple(row))

    def snapshot(self, time: float, values: np.ndarray, domain_length: float) -> Optional[str]:
        self.snapshots.append(FieldSnapshot(np.array(values, copy=True), domain_length, time))
        return None

    def column(self, channel: str, index: int) -> np.ndarray:
        return np.array([row[index] for row in self.rows[channel]], dtype=np.float64)


class CsvDiagnosticsSink(DiagnosticsSink):
    """
    CSV 文件输出

    :param outputs: 输出配置，文件名为空的通道不输出
    :param stem: 文件名前缀（运行标识）
    """

    def __init__(self, outputs: OutputConfig, stem: str = ""):
        super().__init__()
        self.out_dir = Path(outputs.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.stem = sanitize_stem(stem) if stem else ""
        self.serializer = get_serializer(outputs.snapshot_format)
        self._files = {}
        self._writers = {}
        self._paths: List[str] = []
        for channel, filename, columns in (
                ("energy", outputs.energy_csv, ENERGY_COLUMNS),
                ("mass", outputs.mass_csv, MASS_COLUMNS),
                ("extrema", outputs.extrema_csv, EXTREMA_COLUMNS),
        ):
            if not filename:
                continue
            path = self._path_for(filename)
            handle = open(path, "w", encoding="utf-8", newline="")
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(columns)
            self._files[channel] = handle
            self._writers[channel] = writer
            self._paths.append(str(path))

    def _path_for(self, filename: str) -> Path:
        name = f"{self.stem}_{filename}" if self.stem else filename
        return self.out_dir / name

    def _write_row(self, channel: str, row: tuple):
        writer = self._writers.get(channel)
        if writer is not None:
            writer.writerow([str(row[0]), *(_fmt(v) for v in row[1:])])

    def snapshot(self, time: float, values: np.ndarray, domain_length: float) -> Optional[str]:
        snapshot = FieldSnapshot(values, domain_length, time)
        path = self._path_for(f"snapshot_t{time:g}{self.serializer.suffix}")
        payload = self.serializer.serialize(snapshot)
        if isinstance(payload, bytes):
            path.write_bytes(payload)
        else:
            path.write_text(payload, encoding="utf-8")
        self._paths.append(str(path))
        logger.info(f"Wrote snapshot at t={time:g} to {path}")
        return str(path)

    def close(self):
        for handle in self._files.values():
            handle.close()
        self._files.clear()
        self._writers.clear()

    @property
    def paths(self) -> List[str]:
        return list(self._paths)
