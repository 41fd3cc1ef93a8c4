"""
实验配置

pydantic 配置模型、扁平的点分键值配置文件解析、内置算例预设，以及全局级残差检查开关。
"""

import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .enums import InitRecipe, ModelKind, SchemeName, SnapshotFormat, StageSolver
from .errors import ConfigurationError
from .models import GradientFlowModel

# 模型参数直接使用不可变的模型描述
ModelConfig = GradientFlowModel

# 全局级残差检查开关
GLOBAL_RESIDUAL_CHECKS = False


def enable_residual_checks():
    """启用每步的级方程残差检查（小网格上同时与稠密直接解对比）"""
    global GLOBAL_RESIDUAL_CHECKS
    GLOBAL_RESIDUAL_CHECKS = True


def disable_residual_checks():
    """禁用级方程残差检查"""
    global GLOBAL_RESIDUAL_CHECKS
    GLOBAL_RESIDUAL_CHECKS = False


def is_residual_checks_enabled() -> bool:
    """查询级方程残差检查开关状态"""
    return GLOBAL_RESIDUAL_CHECKS


class GridConfig(BaseModel):
    """
    网格配置

    :param n: 每个方向的点数，正偶数
    :param domain_length: 区域边长 L
    """
    model_config = ConfigDict(extra="forbid")

    n: int = 64
    domain_length: float = Field(default=2.0 * math.pi, gt=0.0)

    @field_validator("n")
    @classmethod
    def _even_n(cls, value: int) -> int:
        if value <= 0 or value % 2:
            raise ValueError(f"n must be an even positive integer, got {value}")
        return value


class TimeConfig(BaseModel):
    """
    时间配置

    :param tau: 时间步长，给出 steps 时被 t_end / steps 取代
    :param t_end: 终止时刻
    :param steps: 步数 K
    """
    model_config = ConfigDict(extra="forbid")

    tau: float = Field(default=0.01, gt=0.0)
    t_end: float = Field(default=1.0, ge=0.0)
    steps: Optional[int] = Field(default=None, gt=0)

    def resolve(self) -> Tuple[float, int]:
        """
        返回 (τ, K)

        只给出 τ 时 K = round(t_end/τ)，不整除时给出警告并以 K 步结束。
        """
        if self.steps is not None:
            return self.t_end / self.steps, self.steps
        steps = int(round(self.t_end / self.tau))
        if abs(steps * self.tau - self.t_end) > 1e-9 * max(1.0, self.t_end):
            logger.warning(
                f"t_end={self.t_end} is not a multiple of tau={self.tau}; "
                f"stopping after {steps} steps at t={steps * self.tau}"
            )
        return self.tau, steps


class InitConfig(BaseModel):
    """
    初值配置

    :param recipe: 构造方式
    :param amplitude: SineProduct / SineCosine 的幅值
    :param scale: Random 的缩放
    :param offset: Random 的平移
    :param seed: Random 的种子
    :param phi0: Polycrystal 的平均密度 φ0
    :param lattice_amplitude: Polycrystal 的晶格幅值 B
    :param wavenumber: Polycrystal 的晶格波数 ϑ
    :param patch_size: Polycrystal 晶粒方块边长
    """
    model_config = ConfigDict(extra="forbid")

    recipe: InitRecipe = InitRecipe.SINE_PRODUCT
    amplitude: float = 1.0
    scale: float = 0.1
    offset: float = -0.05
    seed: int = 0
    phi0: float = 0.285
    lattice_amplitude: float = 0.446
    wavenumber: float = 0.66
    patch_size: float = Field(default=40.0, gt=0.0)


class OutputConfig(BaseModel):
    """
    输出配置，文件名为空表示不输出该项

    :param out_dir: 输出目录
    :param energy_csv: 能量文件名
    :param mass_csv: 质量差文件名
    :param extrema_csv: 极值文件名
    :param snapshot_times: 输出快照的时刻
    :param snapshot_format: 快照格式
    """
    model_config = ConfigDict(extra="forbid")

    out_dir: str = "out"
    energy_csv: Optional[str] = "energy.csv"
    mass_csv: Optional[str] = "mass.csv"
    extrema_csv: Optional[str] = "extrema.csv"
    snapshot_times: List[float] = Field(default_factory=list)
    snapshot_format: SnapshotFormat = SnapshotFormat.TEXT


class SolverConfig(BaseModel):
    """
    级方程求解参数

    :param max_iters: 不完全迭代最大次数
    :param tol: 不完全迭代停止容差
    :param startup_tol: 非线性不动点迭代容差
    :param startup_max_sweeps: 非线性不动点迭代最大次数
    :param stage_solver: 求解方式
    :param threads: scipy.fft 线程数，也是收敛性研究的并发数
    :param relative_tolerance: 停止准则改为 Σ‖ΔU‖ ≤ tol·max(1, Σ‖U‖)，默认为绝对准则
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    max_iters: int = Field(default=200, gt=0)
    tol: float = Field(default=1e-12, gt=0.0)
    startup_tol: float = Field(default=1e-13, gt=0.0)
    startup_max_sweeps: int = Field(default=100, gt=0)
    stage_solver: StageSolver = StageSolver.ITERATIVE
    threads: int = Field(default=1, gt=0)
    relative_tolerance: bool = False


class ExperimentConfig(BaseModel):
    """
    一次数值实验的完整配置

    :param scheme: 内置格式名（savgl1..savgl6）或系数表文件路径
    :param reference: 参考解快照文件路径，收敛性研究时代替参考计算
    :param reference_scheme: 参考解使用的格式
    :param reference_tau: 参考解步长
    """
    model_config = ConfigDict(extra="forbid")

    scheme: str = SchemeName.SAVGL1.value
    model: GradientFlowModel = Field(default_factory=GradientFlowModel)
    grid: GridConfig = Field(default_factory=GridConfig)
    time: TimeConfig = Field(default_factory=TimeConfig)
    init: InitConfig = Field(default_factory=InitConfig)
    outputs: OutputConfig = Field(default_factory=OutputConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    reference: Optional[str] = None
    reference_scheme: str = SchemeName.SAVGL6.value
    reference_tau: float = Field(default=1e-4, gt=0.0)

    @field_validator("scheme", "reference_scheme")
    @classmethod
    def _known_scheme(cls, value: str) -> str:
        try:
            return SchemeName.parse(value).value
        except ValueError:
            if Path(value).is_file():
                return value
        raise ValueError(f"{value!r} is neither a built-in scheme nor an existing tableau file")

    @property
    def is_builtin_scheme(self) -> bool:
        return self.scheme in {member.value for member in SchemeName}


# ---------------------------------------------------------------------------
# 键值文件
# ---------------------------------------------------------------------------

_SECTIONS = ("model", "grid", "time", "init", "outputs", "solver")
_TOP_LEVEL = ("scheme", "reference", "reference_scheme", "reference_tau")
_LIST_KEYS = {("outputs", "snapshot_times")}


def _coerce(section: Optional[str], key: str, value: str) -> Any:
    if (section, key) in _LIST_KEYS:
        return [item.strip() for item in value.split(",") if item.strip()]
    if value.lower() in ("none", "null", ""):
        return None
    return value


def _known_keys(section: str) -> Tuple[str, ...]:
    model = ExperimentConfig.model_fields[section].annotation
    return tuple(model.model_fields)


def parse_config(text: str) -> ExperimentConfig:
    """
    解析扁平的点分键值配置

    每行 ``section.key = value`` 或顶层 ``scheme = savgl2``，``#`` 开头为注释。

    :raises ConfigurationError: 未知键、重复键或取值非法
    """
    data: Dict[str, Any] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {number}: expected 'key = value', got {raw.strip()!r}")
        dotted, value = (part.strip() for part in line.split("=", 1))
        if "." in dotted:
            section, key = dotted.split(".", 1)
            if section not in _SECTIONS or key not in _known_keys(section):
                raise ConfigurationError(f"line {number}: unknown key {dotted!r}")
            bucket = data.setdefault(section, {})
        else:
            section, key = None, dotted
            if key not in _TOP_LEVEL:
                raise ConfigurationError(f"line {number}: unknown key {dotted!r}")
            bucket = data
        if key in bucket:
            raise ConfigurationError(f"line {number}: duplicate key {dotted!r}")
        coerced = _coerce(section, key, value)
        if coerced is not None:
            bucket[key] = coerced
    return build_config(data)


def build_config(data: Dict[str, Any]) -> ExperimentConfig:
    """由嵌套字典构造配置，校验失败转换为 :class:`ConfigurationError`"""
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in error['loc'])}: {error['msg']}" for error in e.errors()
        )
        logger.error(f"Invalid configuration: {problems}")
        raise ConfigurationError(f"invalid configuration: {problems}") from e


def load_config(path) -> ExperimentConfig:
    """
    读取配置文件，``preset:<name>`` 返回内置预设

    :raises ConfigurationError: 文件不存在或内容非法
    """
    path = str(path)
    if path.startswith("preset:"):
        return preset_config(path.split(":", 1)[1])
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigurationError(f"cannot read config {path}: {e}") from e
    config = parse_config(text)
    logger.debug(f"Loaded config from {path}: scheme={config.scheme}, model={config.model.kind.value}")
    return config


# ---------------------------------------------------------------------------
# 预设
# ---------------------------------------------------------------------------

_PRESETS: Dict[str, Dict[str, Any]] = {
    "ac_accuracy": {
        "scheme": "savgl2",
        "model": {"kind": ModelKind.ALLEN_CAHN, "epsilon": 0.1, "beta": 2.0},
        "grid": {"n": 64},
        "time": {"t_end": 1.5, "steps": 80},
        "init": {"recipe": InitRecipe.SINE_PRODUCT, "amplitude": 1.0},
        "reference_tau": 1e-4,
    },
    "ac_coarsening": {
        "scheme": "savgl1",
        "model": {"kind": ModelKind.ALLEN_CAHN, "epsilon": 0.05, "beta": 2.0},
        "grid": {"n": 64},
        "time": {"tau": 0.1, "t_end": 30.0},
        "init": {"recipe": InitRecipe.RANDOM, "scale": 0.1, "offset": -0.05, "seed": 0},
    },
    "ch_accuracy": {
        "scheme": "savgl6",
        "model": {"kind": ModelKind.CAHN_HILLIARD, "epsilon": 1.0, "beta": 2.0},
        "grid": {"n": 64},
        "time": {"t_end": 0.3, "steps": 120},
        "init": {"recipe": InitRecipe.SINE_PRODUCT, "amplitude": 0.4},
        "reference_tau": 1e-4,
    },
    "ch_coarsening": {
        "scheme": "savgl1",
        "model": {"kind": ModelKind.CAHN_HILLIARD, "epsilon": 0.1, "beta": 2.0},
        "grid": {"n": 64},
        "time": {"tau": 0.01, "t_end": 1.0},
        "init": {"recipe": InitRecipe.TWO_CIRCLES},
    },
    "pfc_accuracy": {
        "scheme": "savgl5",
        "model": {
            "kind": ModelKind.PHASE_FIELD_CRYSTAL,
            "epsilon1": 0.0, "epsilon2": 0.5, "alpha": 0.99, "beta": 4.0,
        },
        "grid": {"n": 64},
        "time": {"t_end": 0.1, "steps": 240},
        "init": {"recipe": InitRecipe.SINE_COSINE, "amplitude": 0.4},
        "reference_tau": 5e-5,
    },
    "pfc_polycrystal": {
        "scheme": "savgl1",
        "model": {
            "kind": ModelKind.PHASE_FIELD_CRYSTAL,
            "epsilon1": 0.0, "epsilon2": 0.25, "alpha": 0.8, "beta": 0.0,
        },
        "grid": {"n": 400, "domain_length": 400.0},
        "time": {"tau": 0.1, "t_end": 1000.0},
        "init": {"recipe": InitRecipe.POLYCRYSTAL},
        "outputs": {"snapshot_times": [100.0, 500.0, 1000.0]},
    },
    "pfc_polycrystal_small": {
        "scheme": "savgl1",
        "model": {
            "kind": ModelKind.PHASE_FIELD_CRYSTAL,
            "epsilon1": 0.0, "epsilon2": 0.25, "alpha": 0.8, "beta": 0.0,
        },
        "grid": {"n": 100, "domain_length": 100.0},
        "time": {"tau": 0.1, "t_end": 10.0},
        "init": {"recipe": InitRecipe.POLYCRYSTAL, "patch_size": 10.0},
    },
}


def preset_names() -> List[str]:
    return sorted(_PRESETS)


def preset_config(name: str) -> ExperimentConfig:
    """
    内置算例预设

    :raises ConfigurationError: 未知预设名
    """
    if name not in _PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}, choose from {', '.join(preset_names())}")
    return build_config(_PRESETS[name])
