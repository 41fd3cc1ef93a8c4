"""
序列化器模块

格式系数表的键值文本格式，以及场快照的文本 / 原始二进制格式。
浮点数一律用 repr 写出，保证读回后逐位一致。
"""

import re
from abc import ABC, abstractmethod
from typing import Any, Dict, NamedTuple, Optional, Union

import numpy as np
from loguru import logger

from ..enums import ExtrapolationKind, SnapshotFormat
from ..errors import ConfigurationError, StructuralError, TableauFormatError
from ..tableau import GltdTableau

FIELD_HEADER = "SAVGL-FIELD"
_HEADER_PATTERN = re.compile(
    rf"^{FIELD_HEADER} n=(?P<n>\d+) L=(?P<length>\S+) t=(?P<time>\S+)$"
)


class Serializer(ABC):
    """序列化器抽象基类"""

    @abstractmethod
    def serialize(self, value: Any) -> Union[str, bytes]:
        """序列化值"""
        pass

    @abstractmethod
    def deserialize(self, value: Union[str, bytes]) -> Any:
        """反序列化值"""
        pass

    @property
    @abstractmethod
    def suffix(self) -> str:
        """文件后缀"""
        pass


def _format_vector(values) -> str:
    return ", ".join(repr(float(v)) for v in np.ravel(values))


def _format_matrix(matrix) -> str:
    return "; ".join(_format_vector(row) for row in np.atleast_2d(matrix))


def _parse_matrix(text: str, line: int) -> np.ndarray:
    try:
        rows = [[float(entry) for entry in row.split(",")] for row in text.split(";")]
    except ValueError as e:
        raise TableauFormatError(f"invalid number in {text!r}: {e}", line) from e
    widths = {len(row) for row in rows}
    if len(widths) != 1:
        raise TableauFormatError(f"ragged matrix {text!r}", line)
    return np.array(rows, dtype=np.float64)


class TableauTextSerializer(Serializer):
    """
    系数表键值文本格式

    每行 ``key = value``，``#`` 开头为注释。矩阵行之间用 ``;`` 分隔，元素用 ``,`` 分隔。
    必需的键：s, r, nu, d11, d12, d21, d22, c, w。
    """

    _INT_KEYS = ("s", "r", "p", "q", "q_hat", "nu")
    _MATRIX_KEYS = ("d11", "d12", "d21", "d22", "w", "g")
    _VECTOR_KEYS = ("c", "h", "h_tilde")
    _REQUIRED = ("s", "r", "nu", "d11", "d12", "d21", "d22", "c", "w")

    def __init__(self, default_name: str = "custom"):
        self.default_name = default_name

    @property
    def suffix(self) -> str:
        return ".tableau"

    def serialize(self, value: GltdTableau) -> str:
        lines = [
            f"name = {value.name}",
            *(f"{key} = {getattr(value, key)}" for key in self._INT_KEYS),
            *(f"{key} = {_format_matrix(getattr(value, key))}"
              for key in ("d11", "d12", "d21", "d22")),
            f"c = {_format_vector(value.c)}",
            f"w = {_format_matrix(value.w)}",
        ]
        if value.g is not None:
            lines.append(f"g = {_format_matrix(value.g)}")
        for key in ("h", "h_tilde"):
            if getattr(value, key) is not None:
                lines.append(f"{key} = {_format_vector(getattr(value, key))}")
        lines.append(f"extrapolation = {value.extrapolation.value}")
        lines.append(f"extrapolation_shift = {value.extrapolation_shift!r}")
        return "\n".join(lines) + "\n"

    def deserialize(self, value: str) -> GltdTableau:
        entries: Dict[str, Any] = {}
        first_line: Dict[str, int] = {}
        for number, raw in enumerate(value.splitlines(), start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise TableauFormatError(f"expected 'key = value', got {raw.strip()!r}", number)
            key, payload = (part.strip() for part in text.split("=", 1))
            if key in entries:
                raise TableauFormatError(f"duplicate key {key!r}", number)
            entries[key] = self._parse_value(key, payload, number)
            first_line[key] = number
        missing = [key for key in self._REQUIRED if key not in entries]
        if missing:
            raise TableauFormatError(f"missing keys: {', '.join(missing)}")
        w = entries["w"]
        entries.setdefault("name", self.default_name)
        entries.setdefault("p", w.shape[1] - 1)
        entries.setdefault("q", 1)
        entries.setdefault("q_hat", 1)
        try:
            return GltdTableau(**entries)
        except StructuralError as e:
            raise TableauFormatError(str(e)) from e

    def _parse_value(self, key: str, payload: str, line: int) -> Any:
        if key == "name":
            return payload
        if key in self._INT_KEYS:
            try:
                return int(payload)
            except ValueError as e:
                raise TableauFormatError(f"{key} must be an integer, got {payload!r}", line) from e
        if key in self._MATRIX_KEYS:
            return _parse_matrix(payload, line)
        if key in self._VECTOR_KEYS:
            return _parse_matrix(payload, line).ravel()
        if key == "extrapolation":
            try:
                return ExtrapolationKind(payload)
            except ValueError as e:
                raise TableauFormatError(f"unknown extrapolation {payload!r}", line) from e
        if key == "extrapolation_shift":
            try:
                return float(payload)
            except ValueError as e:
                raise TableauFormatError(f"invalid extrapolation_shift {payload!r}", line) from e
        raise TableauFormatError(f"unknown key {key!r}", line)


class FieldSnapshot(NamedTuple):
    """物理空间场快照"""
    values: np.ndarray
    domain_length: float
    time: float


def _header(snapshot: FieldSnapshot) -> str:
    n = snapshot.values.shape[0]
    return f"{FIELD_HEADER} n={n} L={snapshot.domain_length!r} t={snapshot.time!r}"


def _parse_header(line: str) -> Dict[str, Any]:
    match = _HEADER_PATTERN.match(line.strip())
    if match is None:
        raise ConfigurationError(f"invalid snapshot header {line.strip()!r}")
    return {
        "n": int(match["n"]),
        "domain_length": float(match["length"]),
        "time": float(match["time"]),
    }


class FieldTextSerializer(Serializer):
    """表头加 n 行逗号分隔的十进制数，按行优先"""

    @property
    def suffix(self) -> str:
        return ".txt"

    def serialize(self, value: FieldSnapshot) -> str:
        rows = [_format_vector(row) for row in value.values]
        return "\n".join([_header(value), *rows]) + "\n"

    def deserialize(self, value: str) -> FieldSnapshot:
        lines = [line for line in value.splitlines() if line.strip()]
        if not lines:
            raise ConfigurationError("empty snapshot")
        meta = _parse_header(lines[0])
        try:
            values = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
        except ValueError as e:
            raise ConfigurationError(f"invalid snapshot data: {e}") from e
        if values.shape != (meta["n"], meta["n"]):
            raise ConfigurationError(f"snapshot has shape {values.shape}, header says n={meta['n']}")
        return FieldSnapshot(values, meta["domain_length"], meta["time"])


class FieldRawSerializer(Serializer):
    """表头一行，之后是小端 float64 行优先原始数据"""

    @property
    def suffix(self) -> str:
        return ".bin"

    def serialize(self, value: FieldSnapshot) -> bytes:
        data = np.ascontiguousarray(value.values, dtype="<f8").tobytes()
        return (_header(value) + "\n").encode("ascii") + data

    def deserialize(self, value: bytes) -> FieldSnapshot:
        header, _, data = value.partition(b"\n")
        meta = _parse_header(header.decode("ascii"))
        n = meta["n"]
        if len(data) != 8 * n * n:
            raise ConfigurationError(f"raw snapshot holds {len(data)} bytes, expected {8 * n * n}")
        values = np.frombuffer(data, dtype="<f8").reshape(n, n).astype(np.float64)
        return FieldSnapshot(values, meta["domain_length"], meta["time"])


def get_serializer(snapshot_format: Union[SnapshotFormat, str]) -> Serializer:
    """
    获取快照序列化器

    :param snapshot_format: 快照格式
    :return: 序列化器实例
    """
    snapshot_format = SnapshotFormat(snapshot_format)
    if snapshot_format == SnapshotFormat.TEXT:
        return FieldTextSerializer()
    if snapshot_format == SnapshotFormat.RAW:
        return FieldRawSerializer()
    raise ValueError(f"Unsupported snapshot format: {snapshot_format}")


def load_tableau(path, name: Optional[str] = None) -> GltdTableau:
    """从文件读取系数表"""
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    serializer = TableauTextSerializer(default_name=name or str(path))
    tableau = serializer.deserialize(text)
    logger.debug(f"Loaded tableau {tableau.name!r} from {path}")
    return tableau


def dump_tableau(tableau: GltdTableau, path):
    """把系数表写入文件"""
    with open(path, "w", encoding="utf-8") as f:
        f.write(TableauTextSerializer().serialize(tableau))
