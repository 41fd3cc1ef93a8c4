from enum import Enum


class SchemeName(str, Enum):
    """内置 SAV-GL 格式枚举"""
    SAVGL1 = "savgl1"  # one-leg θ=3/4
    SAVGL2 = "savgl2"  # 两步 one-leg γ=δ=1
    SAVGL3 = "savgl3"  # 两步 one-leg γ=δ=2
    SAVGL4 = "savgl4"  # 单级两步 RK
    SAVGL5 = "savgl5"  # Radau IIA, s=2
    SAVGL6 = "savgl6"  # Radau IIA, s=3

    @classmethod
    def parse(cls, value: str) -> "SchemeName":
        """
        宽松解析格式名，接受 ``SAVGL5`` / ``savgl5`` / ``SAV-GL(5)`` 等写法

        :param value: 格式名
        :return: 对应的枚举值
        """
        normalized = (
            value.strip().lower().replace("-", "").replace("(", "").replace(")", "")
        )
        return cls(normalized)


class ModelKind(str, Enum):
    """梯度流模型类型枚举"""
    ALLEN_CAHN = "allen_cahn"  # L² 梯度流
    CAHN_HILLIARD = "cahn_hilliard"  # H⁻¹ 梯度流
    PHASE_FIELD_CRYSTAL = "phase_field_crystal"  # H⁻¹ 梯度流，四阶 L


class OperatorKind(str, Enum):
    """算子符号类型枚举"""
    L = "L"
    G = "G"


class StabilityKind(str, Enum):
    """稳定性证书类型枚举"""
    ALGEBRAIC = "algebraic"  # 代数稳定（G-稳定）
    DIAGONAL = "diagonal"  # 对角稳定


class ExtrapolationKind(str, Enum):
    """非线性项外推方式枚举"""
    TWO_POINT = "two_point"  # Ū = (1+x)u^n - x u^{n-1}
    LAGRANGE = "lagrange"  # 上一步内部级值的 Lagrange 外推


class InitRecipe(str, Enum):
    """初值构造方式枚举"""
    SINE_PRODUCT = "sine_product"
    SINE_COSINE = "sine_cosine"
    RANDOM = "random"
    TWO_CIRCLES = "two_circles"
    POLYCRYSTAL = "polycrystal"


class SnapshotFormat(str, Enum):
    """快照输出格式枚举"""
    TEXT = "text"  # 十进制文本
    RAW = "raw"  # 文本头 + 小端 float64 二进制旁车文件


class StageSolver(str, Enum):
    """内部级线性系统求解方式枚举"""
    ITERATIVE = "iterative"  # 不完全迭代
    DIRECT = "direct"  # 消去 Z 后的 s×s 精确约化
