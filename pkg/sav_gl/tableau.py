"""
GLTD 系数表

定义一般线性时间离散（GLTD）的系数表 :class:`GltdTableau`，构造内置格式
（one-leg θ 格式、两步 one-leg 格式、单级两步 RK、Radau IIA），并数值校验
相容性、代数稳定性、对角稳定性和 MRK 简化阶条件。
"""

import math
from dataclasses import dataclass, fields, replace
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict
from scipy import linalg

from .enums import ExtrapolationKind, SchemeName, StabilityKind
from .errors import PreconditionError, StructuralError

CONSISTENCY_TOL = 1e-12
ORDER_TOL = 1e-12
ALGEBRAIC_EIG_TOL = -1e-10
DIAGONAL_EIG_TOL = 1e-12

_MATRIX_FIELDS = ("d11", "d12", "d21", "d22", "c", "w", "g", "h", "h_tilde")


def _frozen_array(value, ndim: int, name: str) -> np.ndarray:
    array = np.array(value, dtype=np.float64)
    if array.ndim == 0 and ndim == 1:
        array = array.reshape(1)
    if array.ndim != ndim:
        raise StructuralError(f"{name} must be {ndim}-dimensional, got shape {array.shape}")
    array.setflags(write=False)
    return array


def weight_vectors(r: int, p: int) -> np.ndarray:
    """
    one-leg 约定的缩放向量 w_0..w_p

    w_0 = (1,…,1)ᵀ，w_j = (0, (-1)^j, …, (1-r)^j)ᵀ / j!

    :param r: 外部近似个数
    :param p: 方法阶
    :return: r×(p+1) 矩阵，第 j 列为 w_j
    """
    offsets = 1.0 - np.arange(1, r + 1, dtype=np.float64)
    columns = [offsets ** j / math.factorial(j) for j in range(p + 1)]
    return np.column_stack(columns)


class MrkCoefficients(NamedTuple):
    """MRK 形式的系数 (A, Â, b, b̂)"""
    a: np.ndarray
    a_hat: np.ndarray
    b: np.ndarray
    b_hat: np.ndarray


@dataclass(frozen=True, eq=False)
class GltdTableau:
    """
    GLTD 系数表，构造后不可变

    :param name: 标识名
    :param s: 内部级数
    :param r: 外部近似个数
    :param p: 方法阶（元数据）
    :param q: 级阶（元数据）
    :param q_hat: 广义级阶（元数据）
    :param nu: 非线性项外推点数
    :param d11: s×s 系数矩阵
    :param d12: s×r 系数矩阵
    :param d21: r×s 系数矩阵
    :param d22: r×r 系数矩阵
    :param c: 长度 s 的节点
    :param w: r×(p+1) 缩放向量矩阵
    :param g: 代数稳定性证书 G（可选）
    :param h: 代数稳定性证书 H 的对角元（可选）
    :param h_tilde: 对角稳定性证书 H̃ 的对角元（可选）
    :param extrapolation: 外推方式
    :param extrapolation_shift: 两点外推的位移 x，Ū = (1+x)u^n - x u^{n-1}
    """
    name: str
    s: int
    r: int
    p: int
    q: int
    q_hat: int
    nu: int
    d11: np.ndarray
    d12: np.ndarray
    d21: np.ndarray
    d22: np.ndarray
    c: np.ndarray
    w: np.ndarray
    g: Optional[np.ndarray] = None
    h: Optional[np.ndarray] = None
    h_tilde: Optional[np.ndarray] = None
    extrapolation: ExtrapolationKind = ExtrapolationKind.TWO_POINT
    extrapolation_shift: float = 0.0

    def __post_init__(self):
        for attr, ndim in (
                ("d11", 2), ("d12", 2), ("d21", 2), ("d22", 2), ("c", 1), ("w", 2),
        ):
            object.__setattr__(self, attr, _frozen_array(getattr(self, attr), ndim, attr))
        for attr, ndim in (("g", 2), ("h", 1), ("h_tilde", 1)):
            if getattr(self, attr) is not None:
                object.__setattr__(self, attr, _frozen_array(getattr(self, attr), ndim, attr))
        object.__setattr__(self, "extrapolation", ExtrapolationKind(self.extrapolation))
        object.__setattr__(self, "extrapolation_shift", float(self.extrapolation_shift))
        self._validate_dimensions()

    def _validate_dimensions(self):
        s, r = self.s, self.r
        if s < 1 or r < 1:
            raise StructuralError(f"s and r must be positive, got s={s}, r={r}")
        expected = {
            "d11": (s, s), "d12": (s, r), "d21": (r, s), "d22": (r, r), "c": (s,),
        }
        for attr, shape in expected.items():
            actual = getattr(self, attr).shape
            if actual != shape:
                raise StructuralError(f"{attr} has shape {actual}, expected {shape}")
        if self.w.shape[0] != r or self.w.shape[1] < 2:
            raise StructuralError(f"w has shape {self.w.shape}, expected ({r}, >=2)")
        if self.g is not None and self.g.shape != (r, r):
            raise StructuralError(f"g has shape {self.g.shape}, expected ({r}, {r})")
        for attr in ("h", "h_tilde"):
            value = getattr(self, attr)
            if value is not None and value.shape != (s,):
                raise StructuralError(f"{attr} has shape {value.shape}, expected ({s},)")

    def __eq__(self, other) -> bool:
        if not isinstance(other, GltdTableau):
            return NotImplemented
        for f in fields(self):
            mine, theirs = getattr(self, f.name), getattr(other, f.name)
            if f.name in _MATRIX_FIELDS:
                if (mine is None) != (theirs is None):
                    return False
                if mine is not None and not np.array_equal(mine, theirs):
                    return False
            elif mine != theirs:
                return False
        return True

    __hash__ = None

    @property
    def is_mrk_structured(self) -> bool:
        """D21 第 2.. 行为零且 D22 第 2.. 行为 [I 0] 时为 MRK 结构"""
        if self.r == 1:
            return True
        shift = np.zeros((self.r - 1, self.r))
        shift[:, :-1] = np.eye(self.r - 1)
        return bool(
            np.allclose(self.d21[1:], 0.0, rtol=0.0, atol=1e-14)
            and np.allclose(self.d22[1:], shift, rtol=0.0, atol=1e-14)
        )

    def mrk_coefficients(self) -> MrkCoefficients:
        """
        按 MRK 块结构还原 (A, Â, b, b̂)

        :return: MRK 系数
        :raises StructuralError: 系数表不是 MRK 结构
        """
        if not self.is_mrk_structured:
            raise StructuralError(f"tableau {self.name!r} is not MRK-structured")
        return MrkCoefficients(
            a=self.d11, a_hat=self.d12, b=self.d21[0], b_hat=self.d22[0],
        )

    @property
    def d11_inverse(self) -> np.ndarray:
        """D11 的逆"""
        try:
            return np.linalg.inv(self.d11)
        except np.linalg.LinAlgError as e:
            raise StructuralError(f"D11 of {self.name!r} is singular") from e


class ConsistencyReport(BaseModel):
    """相容性校验报告"""
    model_config = ConfigDict(frozen=True)

    residuals: Dict[str, float]
    tol: float = CONSISTENCY_TOL
    passed: bool

    @property
    def failed_conditions(self) -> List[str]:
        return [name for name, value in self.residuals.items() if value > self.tol]


class StabilityCertificate(BaseModel):
    """
    稳定性证书

    :param kind: 代数稳定 / 对角稳定
    :param g: 权矩阵 G（对角稳定时为空）
    :param h: H 或 H̃ 的对角元
    :param min_eig_m: M 或 H̃D11 + D11ᵀH̃ 的最小特征值
    :param min_eig_g: G 的最小特征值（仅代数稳定）
    :param passed: 是否通过
    """
    model_config = ConfigDict(frozen=True)

    kind: StabilityKind
    g: Optional[List[List[float]]] = None
    h: List[float]
    min_eig_m: float
    min_eig_g: Optional[float] = None
    passed: bool


class OrderReport(BaseModel):
    """MRK 简化阶条件 B(l) / C(l) 校验报告"""
    model_config = ConfigDict(frozen=True)

    p: int
    q: int
    b_residuals: Dict[int, float]
    c_residuals: Dict[int, float]
    tol: float = ORDER_TOL
    passed: bool

    @property
    def failed_conditions(self) -> List[str]:
        failed = [f"B({l})" for l, v in self.b_residuals.items() if v > self.tol]
        failed += [f"C({l})" for l, v in self.c_residuals.items() if v > self.tol]
        return failed


class CertificationReport(BaseModel):
    """系数表的完整校验结果"""
    model_config = ConfigDict(frozen=True)

    name: str
    s: int
    r: int
    p: int
    q: int
    q_hat: int
    nu: int
    consistency: ConsistencyReport
    algebraic: Optional[StabilityCertificate] = None
    diagonal: Optional[StabilityCertificate] = None
    order: Optional[OrderReport] = None
    passed: bool


# ---------------------------------------------------------------------------
# 校验
# ---------------------------------------------------------------------------

def check_consistency(t: GltdTableau, tol: float = CONSISTENCY_TOL) -> ConsistencyReport:
    """
    校验四个相容性恒等式

    :param t: 系数表
    :param tol: 残差容差
    :return: 各恒等式的残差范数与结论
    """
    e = np.ones(t.s)
    w0, w1 = t.w[:, 0], t.w[:, 1]
    residuals = {
        "d21_e_plus_d22_w1": float(np.linalg.norm(t.d21 @ e + t.d22 @ w1 - w0 - w1)),
        "d12_w0": float(np.linalg.norm(t.d12 @ w0 - e)),
        "d22_w0": float(np.linalg.norm(t.d22 @ w0 - w0)),
        "stage_abscissae": float(np.linalg.norm(t.d11 @ e + t.d12 @ w1 - t.c)),
    }
    passed = all(value <= tol for value in residuals.values())
    if not passed:
        logger.debug(f"Consistency failed for {t.name}: {residuals}")
    return ConsistencyReport(residuals=residuals, tol=tol, passed=passed)


def assemble_m(t: GltdTableau, g, h) -> np.ndarray:
    """
    组装代数稳定性矩阵 M

    M = [[G - D22ᵀGD22, D12ᵀH - D22ᵀGD21], [HD12 - D21ᵀGD22, D11ᵀH + HD11 - D21ᵀGD21]]

    :param t: 系数表
    :param g: r×r 对称矩阵
    :param h: H 的对角元（长度 s）或 s×s 对角矩阵
    :return: (r+s)×(r+s) 矩阵
    """
    g = np.asarray(g, dtype=np.float64)
    h_diag = _as_diagonal(h, t.s, "h")
    if g.shape != (t.r, t.r):
        raise StructuralError(f"g has shape {g.shape}, expected ({t.r}, {t.r})")
    big_h = np.diag(h_diag)
    top_left = g - t.d22.T @ g @ t.d22
    top_right = t.d12.T @ big_h - t.d22.T @ g @ t.d21
    bottom_left = big_h @ t.d12 - t.d21.T @ g @ t.d22
    bottom_right = t.d11.T @ big_h + big_h @ t.d11 - t.d21.T @ g @ t.d21
    return np.block([[top_left, top_right], [bottom_left, bottom_right]])


def _as_diagonal(h, size: int, name: str) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if h.ndim == 2:
        if not np.array_equal(h, np.diag(np.diag(h))):
            raise StructuralError(f"{name} must be diagonal")
        h = np.diag(h)
    h = np.atleast_1d(h)
    if h.shape != (size,):
        raise StructuralError(f"{name} has shape {h.shape}, expected ({size},)")
    return h


def check_algebraic_stability(t: GltdTableau, g, h) -> StabilityCertificate:
    """
    按给定的 (G, H) 校验代数稳定性

    :param t: 系数表
    :param g: 对称矩阵 G
    :param h: H 的对角元
    :return: 代数稳定性证书
    :raises StructuralError: G 非对称或维度不匹配
    """
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise StructuralError(f"g must be square, got shape {g.shape}")
    if np.max(np.abs(g - g.T)) > 1e-14 * max(1.0, float(np.max(np.abs(g)))):
        raise StructuralError("g must be symmetric")
    h_diag = _as_diagonal(h, t.s, "h")
    m = assemble_m(t, g, h_diag)
    min_eig_m = float(linalg.eigvalsh(0.5 * (m + m.T))[0])
    min_eig_g = float(linalg.eigvalsh(g)[0])
    passed = min_eig_g > 0.0 and bool(np.all(h_diag >= 0.0)) and min_eig_m >= ALGEBRAIC_EIG_TOL
    return StabilityCertificate(
        kind=StabilityKind.ALGEBRAIC,
        g=g.tolist(),
        h=h_diag.tolist(),
        min_eig_m=min_eig_m,
        min_eig_g=min_eig_g,
        passed=passed,
    )


def check_diagonal_stability(t: GltdTableau, h_tilde) -> StabilityCertificate:
    """
    校验对角稳定性：H̃D11 + D11ᵀH̃ 正定

    :param t: 系数表
    :param h_tilde: H̃ 的对角元，须全部为正
    :return: 对角稳定性证书
    :raises PreconditionError: H̃ 存在非正元素
    """
    h_diag = _as_diagonal(h_tilde, t.s, "h_tilde")
    if np.any(h_diag <= 0.0):
        raise PreconditionError(f"h_tilde entries must be positive, got {h_diag.tolist()}")
    big_h = np.diag(h_diag)
    sym = big_h @ t.d11 + t.d11.T @ big_h
    min_eig = float(linalg.eigvalsh(sym)[0])
    return StabilityCertificate(
        kind=StabilityKind.DIAGONAL,
        h=h_diag.tolist(),
        min_eig_m=min_eig,
        passed=min_eig > DIAGONAL_EIG_TOL,
    )


def check_mrk_order_conditions(t: GltdTableau, p: int, q: int) -> OrderReport:
    """
    校验 MRK 简化阶条件

    B(l): l Σ_j b_j c_j^{l-1} + Σ_j b̂_j (1-j)^l = 1,            l = 1..p
    C(l): l Σ_j a_ij c_j^{l-1} + Σ_j â_ij (1-j)^l = c_i^l,      l = 1..q

    :param t: MRK 结构的系数表
    :param p: 待校验的方法阶
    :param q: 待校验的级阶
    :return: 阶条件报告，C(l) 记录各级残差的最大值
    """
    a, a_hat, b, b_hat = t.mrk_coefficients()
    offsets = 1.0 - np.arange(1, t.r + 1, dtype=np.float64)
    b_residuals = {}
    for l in range(1, p + 1):
        value = l * np.dot(b, t.c ** (l - 1)) + np.dot(b_hat, offsets ** l) - 1.0
        b_residuals[l] = float(abs(value))
    c_residuals = {}
    for l in range(1, q + 1):
        values = l * (a @ t.c ** (l - 1)) + a_hat @ offsets ** l - t.c ** l
        c_residuals[l] = float(np.max(np.abs(values)))
    passed = all(v <= ORDER_TOL for v in b_residuals.values()) and all(
        v <= ORDER_TOL for v in c_residuals.values()
    )
    return OrderReport(p=p, q=q, b_residuals=b_residuals, c_residuals=c_residuals, passed=passed)


def certify_tableau(t: GltdTableau) -> CertificationReport:
    """
    用系数表自带的证书矩阵执行全部校验

    :param t: 系数表
    :return: 汇总报告
    """
    consistency = check_consistency(t)
    algebraic = None
    if t.g is not None and t.h is not None:
        algebraic = check_algebraic_stability(t, t.g, t.h)
    diagonal = None
    if t.h_tilde is not None:
        diagonal = check_diagonal_stability(t, t.h_tilde)
    order = check_mrk_order_conditions(t, t.p, t.q) if t.is_mrk_structured else None
    passed = consistency.passed and all(
        report.passed for report in (algebraic, diagonal, order) if report is not None
    )
    return CertificationReport(
        name=t.name, s=t.s, r=t.r, p=t.p, q=t.q, q_hat=t.q_hat, nu=t.nu,
        consistency=consistency, algebraic=algebraic, diagonal=diagonal, order=order,
        passed=passed,
    )


# ---------------------------------------------------------------------------
# 构造
# ---------------------------------------------------------------------------

def lagrange_weights(nodes: Sequence[float], x: float) -> np.ndarray:
    """
    Lagrange 基函数在 x 处的值 L_j(x)

    :param nodes: 互异节点
    :param x: 求值点
    :return: 与 nodes 等长的权重
    """
    nodes = np.asarray(nodes, dtype=np.float64)
    weights = np.ones(len(nodes))
    for j, node in enumerate(nodes):
        for l, other in enumerate(nodes):
            if l != j:
                weights[j] *= (x - other) / (node - other)
    return weights


def one_leg(
        alpha: Sequence[float],
        beta: Sequence[float],
        name: str = "one-leg",
        p: int = 1,
        q: int = 1,
        q_hat: int = 1,
        nu: int = 2,
        g=None,
        h=None,
        h_tilde=None,
        extrapolation_shift: Optional[float] = None,
) -> GltdTableau:
    """
    把 k 步 one-leg 格式 Σ α_j u^{n+1-j} = τ f(Σ β_j u^{n+1-j}) 写成 GLTD 形式

    外部近似为 (u^n, …, u^{n+1-k})，级节点 c₁ = Σ (1-j) β_j。

    :param alpha: α_0..α_k
    :param beta: β_0..β_k
    :param extrapolation_shift: 两点外推位移，缺省取 c₁
    :raises PreconditionError: 系数不相容
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    if alpha.shape != beta.shape or alpha.ndim != 1 or len(alpha) < 2:
        raise StructuralError("alpha and beta must be 1-d sequences of equal length >= 2")
    k = len(alpha) - 1
    lags = 1.0 - np.arange(k + 1, dtype=np.float64)
    if abs(alpha.sum()) > 1e-14 or abs(np.dot(lags, alpha) - 1.0) > 1e-14 or abs(beta.sum() - 1.0) > 1e-14:
        raise PreconditionError(
            f"inconsistent one-leg coefficients alpha={alpha.tolist()} beta={beta.tolist()}"
        )
    alpha0, beta0 = alpha[0], beta[0]
    d11 = np.array([[beta0 / alpha0]])
    d12 = (beta[1:] - beta0 * alpha[1:] / alpha0).reshape(1, k)
    d21 = np.zeros((k, 1))
    d21[0, 0] = 1.0 / alpha0
    d22 = np.zeros((k, k))
    d22[0] = -alpha[1:] / alpha0
    d22[1:, :-1] = np.eye(k - 1)
    c1 = float(np.dot(lags, beta))
    return GltdTableau(
        name=name, s=1, r=k, p=p, q=q, q_hat=q_hat, nu=nu,
        d11=d11, d12=d12, d21=d21, d22=d22, c=[c1], w=weight_vectors(k, p),
        g=g, h=h, h_tilde=h_tilde,
        extrapolation=ExtrapolationKind.TWO_POINT,
        extrapolation_shift=c1 if extrapolation_shift is None else extrapolation_shift,
    )


def one_leg_theta(theta: float) -> GltdTableau:
    """
    one-leg θ 格式 u^{n+1} - u^n = τ f(θu^{n+1} + (1-θ)u^n)

    θ=1 为向后 Euler，θ=1/2 为二阶隐式中点格式。

    :param theta: θ ∈ [1/2, 1]
    :raises PreconditionError: θ 超出范围（失去稳定性保证）
    """
    if not 0.5 <= theta <= 1.0:
        raise PreconditionError(f"theta must lie in [0.5, 1], got {theta}")
    second_order = theta == 0.5
    return one_leg(
        alpha=(1.0, -1.0),
        beta=(theta, 1.0 - theta),
        name=f"one_leg_theta({theta:g})",
        p=2 if second_order else 1,
        q=1,
        q_hat=2 if second_order else 1,
        nu=2,
        g=[[1.0]],
        h=[1.0],
        h_tilde=[1.0],
        extrapolation_shift=1.0 - theta,
    )


def one_leg_two_step(gamma: float, delta: float) -> GltdTableau:
    """
    两参数两步 one-leg 格式，γ=2、δ=1 时即 BDF2

    α = ((1+γ)/2, -γ, (γ-1)/2)，β = ((1+γ+δ)/4, (1-δ)/2, (1-γ+δ)/4)，
    附带证书 H = 1 与

        G = ¼ [[(1+γ)² + δ, 1 - δ - γ²], [1 - δ - γ², (γ-1)² + δ]]

    :param gamma: γ ≥ 0
    :param delta: δ > 0
    """
    if gamma < 0.0:
        raise PreconditionError(f"gamma must be >= 0, got {gamma}")
    if delta <= 0.0:
        raise PreconditionError(f"delta must be > 0, got {delta}")
    off_diagonal = 1.0 - delta - gamma ** 2
    g = 0.25 * np.array([
        [(1.0 + gamma) ** 2 + delta, off_diagonal],
        [off_diagonal, (gamma - 1.0) ** 2 + delta],
    ])
    return one_leg(
        alpha=((1.0 + gamma) / 2.0, -gamma, (gamma - 1.0) / 2.0),
        beta=((1.0 + gamma + delta) / 4.0, (1.0 - delta) / 2.0, (1.0 - gamma + delta) / 4.0),
        name=f"one_leg_two_step({gamma:g},{delta:g})",
        p=2, q=1, q_hat=2, nu=2,
        g=g, h=[1.0], h_tilde=[1.0],
        extrapolation_shift=gamma / 2.0,
    )


def mrk(
        a,
        a_hat,
        b,
        b_hat,
        name: str = "mrk",
        p: int = 1,
        q: int = 1,
        q_hat: int = 1,
        nu: int = 2,
        g=None,
        h=None,
        h_tilde=None,
        extrapolation: Optional[ExtrapolationKind] = None,
) -> GltdTableau:
    """
    由 MRK 系数 (A, Â, b, b̂) 组装 GLTD 块结构

    D11 = A，D12 = Â，D21 = [bᵀ; 0]，D22 = [b̂ᵀ; I 0]

    :param extrapolation: 缺省时 s=1 用两点外推（位移 c₁），s≥2 用 Lagrange 外推
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    s = a.shape[0]
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    b_hat = np.atleast_1d(np.asarray(b_hat, dtype=np.float64))
    r = len(b_hat)
    a_hat = np.asarray(a_hat, dtype=np.float64).reshape(s, r)
    d21 = np.zeros((r, s))
    d21[0] = b
    d22 = np.zeros((r, r))
    d22[0] = b_hat
    d22[1:, :-1] = np.eye(r - 1)
    w = weight_vectors(r, p)
    c = a @ np.ones(s) + a_hat @ w[:, 1]
    if extrapolation is None:
        extrapolation = ExtrapolationKind.TWO_POINT if s == 1 else ExtrapolationKind.LAGRANGE
    return GltdTableau(
        name=name, s=s, r=r, p=p, q=q, q_hat=q_hat, nu=nu,
        d11=a, d12=a_hat, d21=d21, d22=d22, c=c, w=w,
        g=g, h=h, h_tilde=h_tilde,
        extrapolation=extrapolation,
        extrapolation_shift=float(c[0]) if s == 1 else 0.0,
    )


_RADAU_NODES = {
    2: (1.0 / 3.0, 1.0),
    3: ((4.0 - math.sqrt(6.0)) / 10.0, (4.0 + math.sqrt(6.0)) / 10.0, 1.0),
}

# 对角稳定性权重 H̃；s=3 时 H̃=b 使 H̃A + AᵀH̃ 奇异
_RADAU_DIAGONAL_WEIGHTS = {
    3: (1.0, 0.8716, 0.2309),
}


def radau_iia(s: int) -> GltdTableau:
    """
    Radau IIA 配置格式（r=1 的 MRK）

    A 由节点上的 C(s) 条件求出，b 由 B(s) 求出，均为 Vandermonde 线性方程组。

    :param s: 级数，支持 2 和 3
    :raises PreconditionError: 不支持的级数
    """
    if s not in _RADAU_NODES:
        raise PreconditionError(f"radau_iia supports s in {sorted(_RADAU_NODES)}, got {s}")
    c = np.array(_RADAU_NODES[s])
    powers = np.arange(s)
    vandermonde = c[np.newaxis, :] ** powers[:, np.newaxis]
    # C(s)：Σ_j a_ij c_j^{k-1} = c_i^k / k
    rhs = c[np.newaxis, :] ** (powers[:, np.newaxis] + 1) / (powers[:, np.newaxis] + 1)
    a = linalg.solve(vandermonde, rhs).T
    b = linalg.solve(vandermonde, 1.0 / (powers + 1))
    h_tilde = _RADAU_DIAGONAL_WEIGHTS.get(s, b)
    tableau = mrk(
        a=a, a_hat=np.ones((s, 1)), b=b, b_hat=[1.0],
        name=f"radau_iia({s})",
        p=2 * s - 1, q=s, q_hat=s, nu=s + 1,
        g=[[1.0]], h=b, h_tilde=h_tilde,
        extrapolation=ExtrapolationKind.LAGRANGE,
    )
    logger.debug(f"Built {tableau.name}: c={c.tolist()}, b={b.tolist()}")
    return tableau


def two_step_rk_one_stage() -> GltdTableau:
    """
    单级两步 RK 格式

    取 b̂ = (½, ½)，B(2) 与 C(1) 给出 b = 3/2、c = 1/6，代数稳定性要求
    M 的 2×2 外部块半正定，唯一确定 â = (1/3, 2/3)、a = 5/6。
    证书 G = diag(b̂₁+b̂₂, b̂₁)（第一个外部近似是 u^n），H = b，H̃ = 1。
    """
    b_hat = np.array([0.5, 0.5])
    return mrk(
        a=[[5.0 / 6.0]],
        a_hat=[[1.0 / 3.0, 2.0 / 3.0]],
        b=[1.5],
        b_hat=b_hat,
        name="two_step_rk_one_stage",
        p=2, q=1, q_hat=2, nu=2,
        g=np.diag([b_hat.sum(), b_hat[0]]),
        h=[1.5],
        h_tilde=[1.0],
    )


def builtin_tableau(name) -> GltdTableau:
    """
    按名称返回内置格式

    :param name: :class:`SchemeName` 或其字符串写法
    """
    scheme = name if isinstance(name, SchemeName) else SchemeName.parse(str(name))
    builders = {
        SchemeName.SAVGL1: lambda: one_leg_theta(0.75),
        SchemeName.SAVGL2: lambda: one_leg_two_step(1.0, 1.0),
        SchemeName.SAVGL3: lambda: one_leg_two_step(2.0, 2.0),
        SchemeName.SAVGL4: two_step_rk_one_stage,
        SchemeName.SAVGL5: lambda: radau_iia(2),
        SchemeName.SAVGL6: lambda: radau_iia(3),
    }
    return replace(builders[scheme](), name=scheme.value)
