"""
初值构造

正弦乘积、正弦余弦、随机扰动、两个 tanh 圆和三晶粒多晶体。
"""

import math

import numpy as np
from loguru import logger

from .config import InitConfig
from .enums import InitRecipe
from .errors import ConfigurationError
from .spectral import SpectralGrid

# 两个圆的圆心与半径参数 ν
TWO_CIRCLES = (
    (math.pi - 0.7, math.pi - 0.6, 1.5),
    (math.pi + 1.65, math.pi + 1.6, 0.7),
)
# 晶粒中心（相对边长）与取向
POLYCRYSTAL_GRAINS = (
    (0.375, 0.375, math.pi / 4.0),
    (0.5, 0.625, 0.0),
    (0.625, 0.375, -math.pi / 4.0),
)


def sine_product(grid: SpectralGrid, amplitude: float) -> np.ndarray:
    x, y = grid.coordinates
    return amplitude * np.sin(x) * np.sin(y)


def sine_cosine(grid: SpectralGrid, amplitude: float) -> np.ndarray:
    x, y = grid.coordinates
    return amplitude * np.sin(x) * np.cos(y)


def random_field(grid: SpectralGrid, scale: float, offset: float, seed: int) -> np.ndarray:
    """scale·rand + offset，rand 由 PCG64 按行优先生成于 [-1, 1)"""
    rng = np.random.default_rng(seed)
    return scale * rng.uniform(-1.0, 1.0, size=grid.shape) + offset


def two_circles(grid: SpectralGrid, epsilon: float) -> np.ndarray:
    """
    Σ_i -tanh(√((x-x_i)² + (y-y_i)² - ν_i) / (1.2ε)) + 1

    圆内根号下为负，截断为 0。
    """
    if grid.domain_length < 2.0 * math.pi - 1e-12:
        raise ConfigurationError(
            f"two_circles needs a box of side >= 2*pi, got {grid.domain_length}"
        )
    x, y = grid.coordinates
    u = np.zeros(grid.shape)
    clamped = 0
    for xc, yc, nu in TWO_CIRCLES:
        radicand = (x - xc) ** 2 + (y - yc) ** 2 - nu
        clamped += int(np.count_nonzero(radicand < 0.0))
        u += -np.tanh(np.sqrt(np.maximum(radicand, 0.0)) / (1.2 * epsilon)) + 1.0
    if clamped:
        logger.warning(f"two_circles clamped {clamped} negative radicands to zero")
    return u


def _lattice(x_local: np.ndarray, y_local: np.ndarray, phi0: float, amplitude: float, q: float) -> np.ndarray:
    root3 = math.sqrt(3.0)
    return phi0 + amplitude * (
            np.cos(q / root3 * y_local) * np.cos(q * x_local) - 0.5 * np.cos(2.0 * q / root3 * y_local)
    )


def polycrystal(grid: SpectralGrid, config: InitConfig) -> np.ndarray:
    """
    常数 φ0 背景上三个不同取向的晶粒方块

    局部坐标 x_l = x sinθ + y cosθ，y_l = -x cosθ + y sinθ。

    :raises ConfigurationError: 晶粒放不进区域或小于一个晶格周期
    """
    size = config.patch_size
    period = 2.0 * math.pi / config.wavenumber
    if size > 0.25 * grid.domain_length or size < period:
        raise ConfigurationError(
            f"polycrystal patches of side {size} do not fit a box of side {grid.domain_length} "
            f"(need lattice period {period:.3g} <= side <= L/4)"
        )
    x, y = grid.coordinates
    u = np.full(grid.shape, config.phi0)
    for fx, fy, theta in POLYCRYSTAL_GRAINS:
        xc, yc = fx * grid.domain_length, fy * grid.domain_length
        mask = (np.abs(x - xc) <= size / 2.0) & (np.abs(y - yc) <= size / 2.0)
        x_local = x * math.sin(theta) + y * math.cos(theta)
        y_local = -x * math.cos(theta) + y * math.sin(theta)
        lattice = _lattice(x_local, y_local, config.phi0, config.lattice_amplitude, config.wavenumber)
        u[mask] = lattice[mask]
    return u


def init_field(config: InitConfig, grid: SpectralGrid, epsilon: float = 0.1) -> np.ndarray:
    """
    按配置构造初值

    :param config: 初值配置
    :param grid: 网格
    :param epsilon: 模型的界面参数，两个圆的算例使用
    """
    recipe = config.recipe
    if recipe == InitRecipe.SINE_PRODUCT:
        return sine_product(grid, config.amplitude)
    if recipe == InitRecipe.SINE_COSINE:
        return sine_cosine(grid, config.amplitude)
    if recipe == InitRecipe.RANDOM:
        return random_field(grid, config.scale, config.offset, config.seed)
    if recipe == InitRecipe.TWO_CIRCLES:
        return two_circles(grid, epsilon)
    if recipe == InitRecipe.POLYCRYSTAL:
        return polycrystal(grid, config)
    raise ConfigurationError(f"unsupported init recipe {recipe!r}")
