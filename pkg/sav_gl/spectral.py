"""
周期二维 Fourier 配置层

网格、正/逆变换（正变换带 1/N² 归一化）、波数、算子符号和离散内积。
"""

from functools import cached_property
from typing import TYPE_CHECKING, Tuple

import numpy as np
from loguru import logger
from scipy import fft

from .enums import OperatorKind
from .errors import NumericalContaminationError, PreconditionError, StructuralError

if TYPE_CHECKING:
    from .models import GradientFlowModel

# 逆变换允许的相对虚部
IMAG_RESIDUE_TOL = 1e-12


class SpectralGrid:
    """
    [0, L]² 上每个方向 n 个点的周期网格

    同一个网格对象同一时刻只应由一个线程使用（scipy.fft 的工作缓冲），
    维度相同的不同网格对象可以并发使用。

    :param n: 每个方向的点数，正偶数
    :param domain_length: 区域边长 L
    :param workers: scipy.fft 的并行线程数
    """

    def __init__(self, n: int, domain_length: float = 2.0 * np.pi, workers: int = 1):
        if n <= 0 or n % 2:
            raise PreconditionError(f"n must be an even positive integer, got {n}")
        if domain_length <= 0.0:
            raise PreconditionError(f"domain_length must be positive, got {domain_length}")
        self.n = int(n)
        self.domain_length = float(domain_length)
        self.h = self.domain_length / self.n
        self.workers = max(1, int(workers))
        # 波数按变换存储顺序：0, 1, …, n/2-1, -n/2, …, -1
        self.xi = 2.0 * np.pi / self.domain_length * fft.fftfreq(self.n, d=1.0 / self.n)
        self.lap_symbol = -(self.xi[:, np.newaxis] ** 2 + self.xi[np.newaxis, :] ** 2)
        self.xi.setflags(write=False)
        self.lap_symbol.setflags(write=False)

    def __repr__(self) -> str:
        return f"SpectralGrid(n={self.n}, domain_length={self.domain_length!r})"

    @property
    def shape(self) -> Tuple[int, int]:
        return self.n, self.n

    @property
    def area(self) -> float:
        return self.domain_length ** 2

    @property
    def k_squared(self) -> np.ndarray:
        """ξ² + η²"""
        return -self.lap_symbol

    @cached_property
    def coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        """配置点坐标 (x, y)，第一维对应 x"""
        nodes = self.h * np.arange(self.n)
        return np.meshgrid(nodes, nodes, indexing="ij")

    def _check_shape(self, field: np.ndarray, name: str):
        if field.shape != self.shape:
            raise StructuralError(f"{name} has shape {field.shape}, grid expects {self.shape}")

    def forward(self, u: np.ndarray) -> np.ndarray:
        """实场到 Fourier 系数，û = DFT(u) / N²"""
        u = np.asarray(u, dtype=np.float64)
        self._check_shape(u, "field")
        return fft.fft2(u, workers=self.workers) / self.n ** 2

    def inverse(self, uhat: np.ndarray) -> np.ndarray:
        """
        Fourier 系数到实场

        :raises NumericalContaminationError: 虚部超过实部量级的 1e-12
        """
        uhat = np.asarray(uhat)
        self._check_shape(uhat, "coefficients")
        values = fft.ifft2(uhat * self.n ** 2, workers=self.workers)
        scale = float(np.max(np.abs(values))) if values.size else 0.0
        residue = float(np.max(np.abs(values.imag))) if values.size else 0.0
        if residue > IMAG_RESIDUE_TOL * scale:
            logger.error(f"Inverse transform left imaginary residue {residue:.3e} (scale {scale:.3e})")
            raise NumericalContaminationError(
                f"coefficients are not Hermitian-symmetric: imaginary residue {residue:.3e}"
            )
        return np.ascontiguousarray(values.real)

    def laplacian(self, u: np.ndarray) -> np.ndarray:
        """谱方法计算 Δu"""
        return self.inverse(self.lap_symbol * self.forward(u))


def forward(grid: SpectralGrid, u: np.ndarray) -> np.ndarray:
    """正变换"""
    return grid.forward(u)


def inverse(grid: SpectralGrid, uhat: np.ndarray) -> np.ndarray:
    """逆变换"""
    return grid.inverse(uhat)


def operator_symbol(grid: SpectralGrid, model: "GradientFlowModel", which) -> np.ndarray:
    """
    模型算子 L 或 G 的 Fourier 符号

    AC：L_h = ε²(ξ²+η²) + β，G_h ≡ -1；CH：L_h 同上，G_h = -(ξ²+η²)；
    PFC：L_h = α(ξ²+η²)² + β，G_h = -(ξ²+η²)。

    :param which: :class:`OperatorKind` 或 "L" / "G"
    """
    which = OperatorKind(which)
    k2 = grid.k_squared
    if which == OperatorKind.L:
        return model.l_symbol(k2)
    return model.g_symbol(k2)


def inner_product(grid: SpectralGrid, u: np.ndarray, v: np.ndarray) -> float:
    """⟨u, v⟩ = h² Σ u_ij v_ij"""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise StructuralError(f"shape mismatch {u.shape} vs {v.shape}")
    return float(grid.h ** 2 * np.sum(u * v))


def coeff_inner_product(grid: SpectralGrid, uhat: np.ndarray, vhat: np.ndarray) -> float:
    """
    系数空间内积 L² · Re Σ û conj(v̂)

    与对应物理场的 :func:`inner_product` 满足 Parseval 等式。
    """
    if uhat.shape != vhat.shape:
        raise StructuralError(f"shape mismatch {uhat.shape} vs {vhat.shape}")
    return float(grid.area * np.real(np.vdot(vhat, uhat)))


def coeff_norm(grid: SpectralGrid, uhat: np.ndarray) -> float:
    """系数空间 L² 范数"""
    return float(np.sqrt(grid.area * np.real(np.vdot(uhat, uhat))))


def apply_symbol(symbol: np.ndarray, uhat: np.ndarray) -> np.ndarray:
    """Shur 积 σ∘û"""
    if np.shape(symbol) != np.shape(uhat):
        raise StructuralError(f"shape mismatch {np.shape(symbol)} vs {np.shape(uhat)}")
    return symbol * uhat
