"""
梯度流模型

把 Allen-Cahn、Cahn-Hilliard 和相场晶体（PFC）模型写成 SAV 分裂形式：
线性算子 L、G 的符号，非线性能量 F1 及其变分导数，W 函数和 SAV 偏移 C0。
"""

from typing import Optional

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from .enums import ModelKind
from .errors import PreconditionError, SavBreakdownError
from .spectral import SpectralGrid, coeff_inner_product


class GradientFlowModel(BaseModel):
    """
    梯度流模型描述，不可变

    :param kind: 模型类型
    :param epsilon: AC/CH 的界面参数 ε
    :param beta: 稳定化参数 β
    :param epsilon1: PFC 的三次项系数 ε1
    :param epsilon2: PFC 的 ε2
    :param alpha: PFC 中移入 L 的 Δ² 比例 α ∈ (0, 1)
    :param c0: SAV 偏移 C0，为空时用 :func:`default_c0`
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ModelKind = ModelKind.ALLEN_CAHN
    epsilon: float = Field(default=0.1, gt=0.0)
    beta: float = Field(default=2.0, ge=0.0)
    epsilon1: float = Field(default=0.0, ge=0.0)
    epsilon2: float = Field(default=0.5, ge=0.0)
    alpha: float = Field(default=0.99, gt=0.0, lt=1.0)
    c0: Optional[float] = Field(default=None, ge=0.0)

    @property
    def is_h_minus_one(self) -> bool:
        """H⁻¹ 梯度流（质量守恒）"""
        return self.kind != ModelKind.ALLEN_CAHN

    def l_symbol(self, k2: np.ndarray) -> np.ndarray:
        """L 的符号，k2 = ξ² + η²"""
        if self.kind == ModelKind.PHASE_FIELD_CRYSTAL:
            return self.alpha * k2 ** 2 + self.beta
        return self.epsilon ** 2 * k2 + self.beta

    def g_symbol(self, k2: np.ndarray) -> np.ndarray:
        """G 的符号"""
        if self.kind == ModelKind.ALLEN_CAHN:
            return -np.ones_like(k2)
        return -k2

    def f1_density(self, u: np.ndarray, lap_u: Optional[np.ndarray] = None) -> np.ndarray:
        """F1 的被积函数；PFC 需要 Δu"""
        if self.kind == ModelKind.PHASE_FIELD_CRYSTAL:
            return (
                0.25 * u ** 4
                - self.epsilon1 / 3.0 * u ** 3
                + 0.5 * (1.0 - self.epsilon2 - self.beta) * u ** 2
                + u * lap_u
                + 0.5 * (1.0 - self.alpha) * lap_u ** 2
            )
        return 0.25 * (u ** 2 - 1.0) ** 2 - 0.5 * self.beta * u ** 2


def energy_f1(model: GradientFlowModel, u: np.ndarray, grid: SpectralGrid) -> float:
    """
    非线性能量 F1(u) = h² Σ 被积函数

    PFC 的 -|∇u|² 项在周期区域上分部积分为 uΔu，Δu 由谱方法计算。
    """
    u = np.asarray(u, dtype=np.float64)
    lap_u = grid.laplacian(u) if model.kind == ModelKind.PHASE_FIELD_CRYSTAL else None
    return float(grid.h ** 2 * np.sum(model.f1_density(u, lap_u)))


def variational_derivative_f1(
        model: GradientFlowModel, u: np.ndarray, grid: SpectralGrid
) -> np.ndarray:
    """
    δF1/δu

    AC/CH：u³ - u - βu；PFC：u³ - ε1u² + (1-ε2-β)u + 2Δu + (1-α)Δ²u
    """
    u = np.asarray(u, dtype=np.float64)
    if model.kind == ModelKind.PHASE_FIELD_CRYSTAL:
        uhat = grid.forward(u)
        linear = grid.inverse((2.0 * grid.lap_symbol + (1.0 - model.alpha) * grid.lap_symbol ** 2) * uhat)
        return (
            u ** 3
            - model.epsilon1 * u ** 2
            + (1.0 - model.epsilon2 - model.beta) * u
            + linear
        )
    return u ** 3 - u - model.beta * u


def sav_w(model: GradientFlowModel, u: np.ndarray, z: float, grid: SpectralGrid) -> np.ndarray:
    """
    W(u) = δF1/δu / z

    :raises SavBreakdownError: z <= 0
    """
    if not z > 0.0:
        logger.error(f"SAV value z={z!r} is not positive")
        raise SavBreakdownError("SAV value must be positive", z)
    return variational_derivative_f1(model, u, grid) / z


def default_c0(model: GradientFlowModel, domain_area: float) -> float:
    """
    F1 被积函数的逐点下界乘以区域面积

    AC/CH：min_{v≥0} ¼(v-1)² - (β/2)v = -(β²/4 + β/2)；
    PFC：由 uΔu + (1-α)/2(Δu)² ≥ -u²/(2(1-α)) 得到
    g(u) = ¼u⁴ - (ε1/3)u³ + a u²，a = (1-ε2-β)/2 - 1/(2(1-α))，取其极小值的相反数。
    """
    if domain_area <= 0.0:
        raise PreconditionError(f"domain_area must be positive, got {domain_area}")
    if model.kind != ModelKind.PHASE_FIELD_CRYSTAL:
        return domain_area * (model.beta ** 2 / 4.0 + model.beta / 2.0)
    a = 0.5 * (1.0 - model.epsilon2 - model.beta) - 0.5 / (1.0 - model.alpha)
    critical = [0.0]
    discriminant = model.epsilon1 ** 2 - 8.0 * a
    if discriminant >= 0.0:
        root = np.sqrt(discriminant)
        critical += [(model.epsilon1 + root) / 2.0, (model.epsilon1 - root) / 2.0]
    values = [0.25 * u ** 4 - model.epsilon1 / 3.0 * u ** 3 + a * u ** 2 for u in critical]
    return domain_area * max(0.0, -min(values))


def resolve_c0(model: GradientFlowModel, grid: SpectralGrid) -> float:
    """配置的 C0，未配置时取 :func:`default_c0`"""
    if model.c0 is not None:
        return model.c0
    return default_c0(model, grid.area)


def sav_value(model: GradientFlowModel, u: np.ndarray, grid: SpectralGrid, c0: float) -> float:
    """
    √(F1(u) + C0)

    :raises SavBreakdownError: F1 + C0 <= 0
    """
    radicand = energy_f1(model, u, grid) + c0
    if not radicand > 0.0:
        logger.error(f"F1 + C0 = {radicand!r} is not positive")
        raise SavBreakdownError("F1 + C0 must be positive", radicand)
    return float(np.sqrt(radicand))


def sav_init(
        model: GradientFlowModel,
        u0: np.ndarray,
        grid: SpectralGrid,
        c0: Optional[float] = None,
) -> float:
    """
    z(0) = √(F1(u0) + C0)

    :param c0: 显式 C0，缺省用 :func:`resolve_c0`
    """
    return sav_value(model, u0, grid, resolve_c0(model, grid) if c0 is None else c0)


def original_energy(model: GradientFlowModel, grid: SpectralGrid, u: np.ndarray) -> float:
    """原始自由能 ½⟨Lu, u⟩ + F1(u)"""
    uhat = grid.forward(u)
    quadratic = 0.5 * coeff_inner_product(grid, model.l_symbol(grid.k_squared) * uhat, uhat)
    return quadratic + energy_f1(model, u, grid)
