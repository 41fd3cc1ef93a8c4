"""
全离散 SAV-GL 时间推进

级外推、逐 Fourier 模态对角化的级方程求解（不完全迭代或消去 Z 的精确约化）、
外部量更新、起步过程以及能量/质量诊断。
"""

import math
from dataclasses import dataclass, replace
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import linalg

from .config import SolverConfig, is_residual_checks_enabled
from .decorators import timed
from .enums import ExtrapolationKind, OperatorKind, StageSolver
from .errors import (
    NonConvergenceError,
    StartupError,
    StartupRequiredError,
    StructuralError,
    VerificationError,
)
from .models import (
    GradientFlowModel,
    original_energy,
    resolve_c0,
    sav_init,
    sav_value,
    sav_w,
)
from .spectral import SpectralGrid, coeff_inner_product, coeff_norm, operator_symbol
from .tableau import GltdTableau, lagrange_weights, one_leg_theta
from .utils.safe_oper import guarded_linalg
from .utils.statistics import record_stage_solve

# 级残差检查的容差
STAGE_RESIDUAL_TOL = 1e-10
# 与稠密直接解对比的规模上限
ORACLE_MAX_N = 16
# Lagrange 节点与 0 重合的判定
NODE_TOL = 1e-12
# 不动点迭代判为发散：差值超过历史最小值的倍数
DIVERGENCE_FACTOR = 10.0
# 起步细分的最大层数，每层子步数翻倍
MAX_SUBSTEP_LEVEL = 12


@dataclass(frozen=True, eq=False)
class SimulationState:
    """
    时间推进状态

    :param u_ext: r 个外部近似的 Fourier 系数 û_i^[n]
    :param z_ext: r 个 SAV 外部近似 z_i^[n]
    :param tau: 时间步长
    :param step_index: 步数 n
    :param u_stage_prev: 上一步的 s 个级值系数（首个完整步之前为空）
    :param u_prev_ext: 上一步开始时的 û_1，r=1 的两点外推需要
    """
    u_ext: Tuple[np.ndarray, ...]
    z_ext: np.ndarray
    tau: float
    step_index: int = 0
    u_stage_prev: Tuple[np.ndarray, ...] = ()
    u_prev_ext: Optional[np.ndarray] = None

    @property
    def time(self) -> float:
        return self.step_index * self.tau


@dataclass
class StageSolveStats:
    """级方程求解统计"""
    iterations: int = 0
    final_residual: float = 0.0
    solver: str = StageSolver.ITERATIVE.value


class StageSolution(NamedTuple):
    u_hat: np.ndarray  # (s, n, n)
    z: np.ndarray  # (s,)
    stats: StageSolveStats
    w_hat: np.ndarray  # (s, n, n)


@dataclass
class StepDiagnostics:
    """单步诊断量"""
    step_index: int
    time: float
    energy: float
    original_energy: float
    mass: float
    u_max: float
    u_min: float
    stats: Optional[StageSolveStats] = None
    nonlinear: bool = False


class StageOperator:
    """
    固定 τ 下的级方程算子

    逐模态矩阵 τ⁻¹D11⁻¹ - (G_h L_h)(m,l) I_s 只依赖 τ、D11 和符号，求逆一次后每步复用。
    """

    def __init__(
            self,
            tableau: GltdTableau,
            model: GradientFlowModel,
            grid: SpectralGrid,
            tau: float,
    ):
        self.tableau = tableau
        self.grid = grid
        self.tau = tau
        self.l_symbol = operator_symbol(grid, model, OperatorKind.L)
        self.g_symbol = operator_symbol(grid, model, OperatorKind.G)
        self.gl_symbol = self.g_symbol * self.l_symbol
        d11_inv = tableau.d11_inverse
        self.scaled_d11_inv = d11_inv / tau
        self.coupling = d11_inv @ tableau.d12 / tau
        s = tableau.s
        matrices = (
                self.scaled_d11_inv[np.newaxis, np.newaxis, :, :]
                - self.gl_symbol[:, :, np.newaxis, np.newaxis] * np.eye(s)
        )
        self.mode_inverse = guarded_linalg(
            lambda: np.linalg.inv(matrices), f"per-mode inverse ({tableau.name}, tau={tau:g})"
        )

    def solve_modes(self, rhs: np.ndarray) -> np.ndarray:
        """逐模态求解 s×s 方程组，rhs 形状 (s, n, n)"""
        return np.einsum("xyij,jxy->ixy", self.mode_inverse, rhs)

    def z_matrix(self, c_diag: np.ndarray) -> np.ndarray:
        """τ⁻¹D11⁻¹ - C/2"""
        return self.scaled_d11_inv - 0.5 * np.diag(c_diag)


def _stack(fields: Sequence[np.ndarray]) -> np.ndarray:
    return np.stack([np.asarray(f) for f in fields])


def _distance(grid: SpectralGrid, a: np.ndarray, b: np.ndarray) -> float:
    return float(sum(coeff_norm(grid, a[i] - b[i]) for i in range(a.shape[0])))


def _within_tolerance(
        grid: SpectralGrid,
        difference: float,
        u_hat: np.ndarray,
        tol: float,
        settings: SolverConfig,
) -> bool:
    """Σ‖ΔU‖ ≤ tol；relative_tolerance 打开时右端乘以 max(1, Σ‖U‖)"""
    if not settings.relative_tolerance:
        return difference <= tol
    return difference <= tol * max(1.0, float(sum(coeff_norm(grid, u) for u in u_hat)))


def has_history(tableau: GltdTableau, state: SimulationState) -> bool:
    """外推所需的历史值是否齐备"""
    if tableau.extrapolation == ExtrapolationKind.LAGRANGE:
        return len(state.u_stage_prev) == tableau.s and state.u_prev_ext is not None
    if tableau.r >= 2:
        return state.step_index >= tableau.r - 1 and len(state.u_ext) == tableau.r
    return state.u_prev_ext is not None


def lagrange_history(
        tableau: GltdTableau,
        state: SimulationState,
) -> Tuple[np.ndarray, List[np.ndarray]]:
    """
    Lagrange 外推的节点与值（以上一步起点为 0）

    节点 {0, c_1..c_s}，值 {u^{n-1}, U_{n-1,1..s}}；某个 c_j 与 0 重合时去掉节点 0。
    """
    nodes = [float(c) for c in tableau.c]
    values = list(state.u_stage_prev)
    if min(abs(c) for c in nodes) > NODE_TOL:
        nodes.insert(0, 0.0)
        values.insert(0, state.u_prev_ext)
    return np.array(nodes), values


def extrapolate_stages(
        tableau: GltdTableau,
        state: SimulationState,
        grid: Optional[SpectralGrid] = None,
) -> List[np.ndarray]:
    """
    计算非线性项的级外推值 Ū_{n,i}（物理空间）

    两点外推：Ū = (1+x)u^n - x u^{n-1}；s≥2 的 MRK 过 {0, c_j} 上一步的值
    做 s+1 点 Lagrange 外推，在 1+c_i 处求值。

    :raises StartupRequiredError: 历史值不足
    """
    if not has_history(tableau, state):
        raise StartupRequiredError(
            f"{tableau.name} needs more history to extrapolate at step {state.step_index}"
        )
    if grid is None:
        grid = SpectralGrid(state.u_ext[0].shape[0])
    if tableau.extrapolation == ExtrapolationKind.LAGRANGE:
        nodes, values = lagrange_history(tableau, state)
        previous = _stack(values)
        extrapolants = []
        for c_i in tableau.c:
            weights = lagrange_weights(nodes, 1.0 + c_i)
            extrapolants.append(grid.inverse(np.tensordot(weights, previous, axes=1)))
        return extrapolants
    u_n = state.u_ext[0]
    u_nm1 = state.u_ext[1] if tableau.r >= 2 else state.u_prev_ext
    x = tableau.extrapolation_shift
    ubar = grid.inverse((1.0 + x) * u_n - x * u_nm1)
    return [ubar] * tableau.s


def _stage_forcing(
        model: GradientFlowModel,
        grid: SpectralGrid,
        ubar: Sequence[np.ndarray],
        c0: float,
) -> np.ndarray:
    # W(Ū_i) 以与 Ū_i 一致的 SAV 值 √(F1(Ū_i)+C0) 归一化
    w_hat = []
    for field_i in ubar:
        z_ref = sav_value(model, field_i, grid, c0)
        w_hat.append(grid.forward(sav_w(model, field_i, z_ref, grid)))
    return np.stack(w_hat)


def _solve(
        operator: StageOperator,
        model: GradientFlowModel,
        state: SimulationState,
        ubar: Sequence[np.ndarray],
        settings: SolverConfig,
) -> StageSolution:
    grid = operator.grid
    s = operator.tableau.s
    if len(ubar) != s:
        raise StructuralError(f"expected {s} extrapolated stages, got {len(ubar)}")
    c0 = resolve_c0(model, grid)
    w_hat = _stage_forcing(model, grid, ubar, c0)
    b_fields = operator.g_symbol * w_hat
    c_diag = np.array([coeff_inner_product(grid, w_hat[i], b_fields[i]) for i in range(s)])
    u_rhs = np.einsum("ij,jxy->ixy", operator.coupling, _stack(state.u_ext))
    z_rhs = operator.coupling @ np.asarray(state.z_ext, dtype=np.float64)
    z_matrix = operator.z_matrix(c_diag)

    def c_tilde(u_hat):
        return np.array([
            coeff_inner_product(grid, w_hat[i], operator.gl_symbol * u_hat[i]) for i in range(s)
        ])

    def solve_z(rhs):
        return guarded_linalg(lambda: linalg.solve(z_matrix, rhs), "Z system")

    if settings.stage_solver == StageSolver.DIRECT:
        return _solve_direct(operator, w_hat, b_fields, u_rhs, z_rhs, z_matrix, solve_z)

    if not np.any(w_hat):
        # 无耦合：一次对角求解即为精确解
        u_hat = operator.solve_modes(u_rhs)
        z = solve_z(z_rhs + 0.5 * c_tilde(u_hat))
        return StageSolution(u_hat, z, StageSolveStats(1, 0.0), w_hat)

    u_hat = _stack([grid.forward(f) for f in ubar])
    residual = float("inf")
    for iteration in range(1, settings.max_iters + 1):
        z = solve_z(z_rhs + 0.5 * c_tilde(u_hat))
        u_next = operator.solve_modes(u_rhs + z[:, np.newaxis, np.newaxis] * b_fields)
        residual = _distance(grid, u_next, u_hat)
        u_hat = u_next
        if _within_tolerance(grid, residual, u_hat, settings.tol, settings):
            z = solve_z(z_rhs + 0.5 * c_tilde(u_hat))
            return StageSolution(u_hat, z, StageSolveStats(iteration, residual), w_hat)
    stats = StageSolveStats(settings.max_iters, residual)
    logger.error(
        f"Incomplete iteration did not converge in {settings.max_iters} sweeps "
        f"(residual {residual:.3e})"
    )
    raise NonConvergenceError(
        f"stage iteration exceeded {settings.max_iters} sweeps, residual {residual:.3e}",
        stats=stats,
        step_index=state.step_index,
    )


def _solve_direct(operator, w_hat, b_fields, u_rhs, z_rhs, z_matrix, solve_z) -> StageSolution:
    # Û = P⁻¹(R + Z∘B) 代入 C̃，得到 Z 的 s×s 方程组
    grid = operator.grid
    s = operator.tableau.s
    base = operator.solve_modes(u_rhs)
    responses = []
    for j in range(s):
        unit = np.zeros_like(b_fields)
        unit[j] = b_fields[j]
        responses.append(operator.solve_modes(unit))
    kernel = np.array([
        [coeff_inner_product(grid, w_hat[i], operator.gl_symbol * responses[j][i]) for j in range(s)]
        for i in range(s)
    ])
    offset = np.array([
        coeff_inner_product(grid, w_hat[i], operator.gl_symbol * base[i]) for i in range(s)
    ])
    reduced = z_matrix - 0.5 * kernel
    z = guarded_linalg(lambda: linalg.solve(reduced, z_rhs + 0.5 * offset), "reduced Z system")
    u_hat = base + sum(z[j] * responses[j] for j in range(s))
    return StageSolution(u_hat, z, StageSolveStats(1, 0.0, StageSolver.DIRECT.value), w_hat)


def solve_stages(
        tableau: GltdTableau,
        model: GradientFlowModel,
        grid: SpectralGrid,
        state: SimulationState,
        ubar: Sequence[np.ndarray],
        settings: Optional[SolverConfig] = None,
        operator: Optional[StageOperator] = None,
) -> Tuple[np.ndarray, np.ndarray, StageSolveStats]:
    """
    求解一步的级方程 (Û, Z)

    逐模态 s×s 方程 [τ⁻¹D11⁻¹ - (G_h L_h) I_s] Û = τ⁻¹D11⁻¹D12 û + Z∘B，
    Z 满足 (τ⁻¹D11⁻¹ - C/2) Z = τ⁻¹D11⁻¹D12 z + C̃/2。

    :param ubar: s 个外推场（物理空间）
    :param settings: 求解参数，缺省为 :class:`SolverConfig` 默认值
    :return: (Û 形状 (s, n, n), Z 长度 s, 统计)
    :raises NonConvergenceError: 不完全迭代超过最大次数
    """
    settings = settings or SolverConfig()
    operator = operator or StageOperator(tableau, model, grid, state.tau)
    solution = _solve(operator, model, state, ubar, settings)
    return solution.u_hat, solution.z, solution.stats


def solve_stages_nonlinear(
        tableau: GltdTableau,
        model: GradientFlowModel,
        grid: SpectralGrid,
        state: SimulationState,
        settings: Optional[SolverConfig] = None,
        operator: Optional[StageOperator] = None,
) -> StageSolution:
    """
    非线性格式的级方程：不动点迭代 Ū^{(k+1)} := U^{(k)}

    差值不超过 startup_tol 时收敛；差值已在内层容差 tol 以内且不再下降时，
    视为停在内层求解精度上，同样接受。

    :raises StartupError: 不动点迭代发散或超过最大次数
    """
    settings = settings or SolverConfig()
    operator = operator or StageOperator(tableau, model, grid, state.tau)
    start = grid.inverse(state.u_ext[0])
    ubar = [start] * tableau.s
    previous = _stack([grid.forward(f) for f in ubar])
    difference = float("inf")
    smallest = float("inf")
    total_iterations = 0
    for sweep in range(1, settings.startup_max_sweeps + 1):
        solution = _solve(operator, model, state, ubar, settings)
        total_iterations += solution.stats.iterations
        last_difference = difference
        difference = _distance(grid, solution.u_hat, previous)
        stalled = last_difference <= difference and _within_tolerance(
            grid, difference, solution.u_hat, settings.tol, settings
        )
        if stalled or _within_tolerance(
                grid, difference, solution.u_hat, settings.startup_tol, settings
        ):
            logger.debug(
                f"Nonlinear stage fixed point converged in {sweep} sweeps "
                f"(difference {difference:.3e})"
            )
            solution.stats.iterations = total_iterations
            solution.stats.final_residual = difference
            return solution
        if not math.isfinite(difference) or difference > DIVERGENCE_FACTOR * smallest:
            logger.warning(
                f"Nonlinear fixed point diverges at sweep {sweep} "
                f"(difference {difference:.3e}, tau={state.tau:g})"
            )
            raise StartupError(
                f"nonlinear fixed point diverges, difference {difference:.3e}; try a smaller tau",
                stats=StageSolveStats(total_iterations, difference),
                step_index=state.step_index,
            )
        smallest = min(smallest, difference)
        previous = solution.u_hat
        ubar = [grid.inverse(u) for u in solution.u_hat]
    logger.warning(
        f"Nonlinear fixed point did not converge in {settings.startup_max_sweeps} sweeps "
        f"(difference {difference:.3e}, tau={state.tau:g})"
    )
    raise StartupError(
        f"nonlinear fixed point exceeded {settings.startup_max_sweeps} sweeps, "
        f"difference {difference:.3e}; try a smaller tau",
        stats=StageSolveStats(total_iterations, difference),
        step_index=state.step_index,
    )


def dense_stage_solve(
        tableau: GltdTableau,
        model: GradientFlowModel,
        grid: SpectralGrid,
        state: SimulationState,
        ubar: Sequence[np.ndarray],
) -> Tuple[np.ndarray, np.ndarray]:
    """
    显式组装 (s·n² + s) 维耦合线性方程组并直接求解，仅用于小网格上的校验

    :return: (Û 形状 (s, n, n), Z)
    """
    operator = StageOperator(tableau, model, grid, state.tau)
    s, n = tableau.s, grid.n
    modes = n * n
    c0 = resolve_c0(model, grid)
    w_hat = _stage_forcing(model, grid, ubar, c0).reshape(s, modes)
    b_fields = (operator.g_symbol.reshape(modes) * w_hat)
    gl = operator.gl_symbol.reshape(modes)
    size = s * modes + s
    system = np.zeros((size, size), dtype=np.complex128)
    rhs = np.zeros(size, dtype=np.complex128)
    u_rhs = np.einsum("ij,jxy->ixy", operator.coupling, _stack(state.u_ext)).reshape(s, modes)
    z_rhs = operator.coupling @ np.asarray(state.z_ext, dtype=np.float64)
    diagonal = np.arange(modes)
    for i in range(s):
        rows = i * modes + diagonal
        for j in range(s):
            system[rows, j * modes + diagonal] += operator.scaled_d11_inv[i, j]
        system[rows, i * modes + diagonal] -= gl
        system[rows, s * modes + i] = -b_fields[i]
        rhs[rows] = u_rhs[i]
        z_row = s * modes + i
        for j in range(s):
            system[z_row, s * modes + j] += operator.scaled_d11_inv[i, j]
        system[z_row, s * modes + i] -= 0.5 * grid.area * np.real(np.vdot(w_hat[i], b_fields[i]))
        system[z_row, i * modes + diagonal] = -0.5 * grid.area * np.conj(w_hat[i]) * gl
        rhs[z_row] = z_rhs[i]
    solution = guarded_linalg(lambda: linalg.solve(system, rhs), "dense stage system")
    u_hat = solution[: s * modes].reshape(s, n, n)
    return u_hat, np.real(solution[s * modes:])


def stage_residuals(
        operator: StageOperator,
        state: SimulationState,
        solution: StageSolution,
) -> float:
    """
    未分裂级方程的最大相对残差

    U_i - τ Σ_j D11_ij U̇_j - Σ_j D12_ij û_j 与 Z 的对应方程。
    """
    tableau, grid = operator.tableau, operator.grid
    u_dot, z_dot = _dotted(operator, solution)
    u_ext = _stack(state.u_ext)
    u_res = (
            solution.u_hat
            - state.tau * np.einsum("ij,jxy->ixy", tableau.d11, u_dot)
            - np.einsum("ij,jxy->ixy", tableau.d12, u_ext)
    )
    z_res = solution.z - state.tau * tableau.d11 @ z_dot - tableau.d12 @ np.asarray(state.z_ext)
    worst = 0.0
    for i in range(tableau.s):
        worst = max(worst, coeff_norm(grid, u_res[i]) / max(1.0, coeff_norm(grid, solution.u_hat[i])))
        worst = max(worst, abs(z_res[i]) / max(1.0, abs(solution.z[i])))
    return worst


def _dotted(operator: StageOperator, solution: StageSolution) -> Tuple[np.ndarray, np.ndarray]:
    # U̇_j = G∘(L∘U_j + Z_j Ŵ_j)，Ż_j = ½⟨Ŵ_j, U̇_j⟩
    u_dot = operator.g_symbol * (
            operator.l_symbol * solution.u_hat + solution.z[:, np.newaxis, np.newaxis] * solution.w_hat
    )
    z_dot = np.array([
        0.5 * coeff_inner_product(operator.grid, solution.w_hat[j], u_dot[j])
        for j in range(solution.u_hat.shape[0])
    ])
    return u_dot, z_dot


def discrete_energy(
        tableau: GltdTableau,
        model: GradientFlowModel,
        grid: SpectralGrid,
        state: SimulationState,
) -> float:
    """
    离散自由能 Υ = ½ Σ g_ij ⟨L_h∘û_i, û_j⟩ + Σ g_ij z_i z_j - C0

    :raises StructuralError: 系数表没有 G 证书
    """
    if tableau.g is None:
        raise StructuralError(f"tableau {tableau.name!r} carries no G certificate")
    l_symbol = operator_symbol(grid, model, OperatorKind.L)
    r = tableau.r
    quadratic = 0.0
    for i in range(r):
        l_u = l_symbol * state.u_ext[i]
        for j in range(r):
            if tableau.g[i, j] != 0.0:
                quadratic += tableau.g[i, j] * coeff_inner_product(grid, l_u, state.u_ext[j])
    z = np.asarray(state.z_ext, dtype=np.float64)
    return float(0.5 * quadratic + z @ tableau.g @ z - resolve_c0(model, grid))


def total_mass(grid: SpectralGrid, state: SimulationState) -> float:
    """第一个外部近似的总质量 L²·û(0,0)"""
    return float(grid.area * np.real(state.u_ext[0][0, 0]))


def initial_state(
        tableau: GltdTableau,
        model: GradientFlowModel,
        grid: SpectralGrid,
        u0: np.ndarray,
        tau: float,
) -> SimulationState:
    """由 u0 的滞后副本构成的第 0 步状态"""
    u0_hat = grid.forward(u0)
    z0 = sav_init(model, u0, grid)
    return SimulationState(
        u_ext=tuple(u0_hat.copy() for _ in range(tableau.r)),
        z_ext=np.full(tableau.r, z0),
        tau=tau,
    )


def companion_theta(tableau: GltdTableau) -> float:
    """
    r≥2 起步伴随 one-leg θ 格式的参数

    从滞后副本 (u0, u0) 出发，一步 θ 格式后 Υ 的增量为
    σΔE + (g11-σ)(½⟨L d, d⟩ + δz²)，σ = Σ_j g_1j。θ ≥ max(½, g11/(2σ)) 时增量非正。
    """
    if tableau.g is None:
        return 0.5
    sigma = float(np.sum(tableau.g[0]))
    if sigma <= 0.0:
        logger.warning(f"{tableau.name}: first row of G sums to {sigma:g}, starting with theta=1")
        return 1.0
    theta = max(0.5, float(tableau.g[0, 0]) / (2.0 * sigma))
    if theta > 1.0:
        logger.warning(f"{tableau.name}: dissipative startup needs theta={theta:g}, using 1")
        return 1.0
    return theta


class SavGlIntegrator:
    """
    绑定 (系数表, 模型, 网格, 求解参数) 的推进器，按 τ 缓存级方程算子

    一个推进器只服务一条轨道，不同轨道使用不同实例。
    """

    def __init__(
            self,
            tableau: GltdTableau,
            model: GradientFlowModel,
            grid: SpectralGrid,
            settings: Optional[SolverConfig] = None,
    ):
        self.tableau = tableau
        self.model = model
        self.grid = grid
        self.settings = settings or SolverConfig()
        self._operators = {}

    def operator(self, tau: float) -> StageOperator:
        if tau not in self._operators:
            self._operators[tau] = StageOperator(self.tableau, self.model, self.grid, tau)
        return self._operators[tau]

    def startup(self, u0: np.ndarray, tau: float) -> SimulationState:
        """
        生成可以进入线性推进的初始状态

        r=1 时只做 sav_init，第一步由 :meth:`advance` 自动走非线性格式；
        r≥2 时用 θ = :func:`companion_theta` 的 one-leg 伴随格式生成 r-1 个滞后值。
        伴随步先走非线性格式，不动点迭代失败时改用 Ū = u^n 的线性 SAV 步。
        """
        state = initial_state(self.tableau, self.model, self.grid, u0, tau)
        r = self.tableau.r
        if r == 1:
            return state
        theta = companion_theta(self.tableau)
        companion = SavGlIntegrator(one_leg_theta(theta), self.model, self.grid, self.settings)
        single = initial_state(companion.tableau, self.model, self.grid, u0, tau)
        u_levels, z_levels = [single.u_ext[0]], [single.z_ext[0]]
        for _ in range(r - 1):
            try:
                single, _ = companion.advance_nonlinear(single)
            except (NonConvergenceError, ArithmeticError) as e:
                logger.warning(f"Nonlinear companion step failed ({e}); using a linear SAV step")
                single, _ = companion.advance_linear(single)
            u_levels.insert(0, single.u_ext[0])
            z_levels.insert(0, single.z_ext[0])
        logger.info(
            f"Startup for {self.tableau.name} finished with {r - 1} companion step(s), theta={theta:g}"
        )
        return SimulationState(
            u_ext=tuple(u_levels[:r]),
            z_ext=np.array(z_levels[:r]),
            tau=tau,
            step_index=r - 1,
            u_prev_ext=u_levels[1],
        )

    def _update_state(
            self,
            state: SimulationState,
            operator: StageOperator,
            solution: StageSolution,
    ) -> SimulationState:
        tableau = self.tableau
        if is_residual_checks_enabled():
            self._check_solution(state, operator, solution)
        u_dot, z_dot = _dotted(operator, solution)
        u_ext = _stack(state.u_ext)
        u_next = (
                state.tau * np.einsum("ij,jxy->ixy", tableau.d21, u_dot)
                + np.einsum("ij,jxy->ixy", tableau.d22, u_ext)
        )
        z_next = state.tau * tableau.d21 @ z_dot + tableau.d22 @ np.asarray(state.z_ext)
        return replace(
            state,
            u_ext=tuple(u_next[i] for i in range(tableau.r)),
            z_ext=z_next,
            step_index=state.step_index + 1,
            u_stage_prev=tuple(solution.u_hat[i] for i in range(tableau.s)),
            u_prev_ext=state.u_ext[0],
        )

    def _finish_step(
            self,
            state: SimulationState,
            operator: StageOperator,
            solution: StageSolution,
            nonlinear: bool,
    ) -> Tuple[SimulationState, StepDiagnostics]:
        new_state = self._update_state(state, operator, solution)
        record_stage_solve(solution.stats.iterations, solution.stats.final_residual)
        return new_state, self.diagnostics(new_state, solution.stats, nonlinear)

    def _check_solution(self, state, operator, solution):
        worst = stage_residuals(operator, state, solution)
        if worst > STAGE_RESIDUAL_TOL:
            logger.error(f"Stage residual {worst:.3e} exceeds {STAGE_RESIDUAL_TOL:g}")
            raise NonConvergenceError(
                f"stage residual {worst:.3e} exceeds {STAGE_RESIDUAL_TOL:g}",
                stats=solution.stats,
                step_index=state.step_index,
            )

    @timed("advance")
    def advance(self, state: SimulationState) -> Tuple[SimulationState, StepDiagnostics]:
        """
        推进一步：外推 → 级方程 → 外部量更新

        历史不足且 r=1 时自动改走非线性格式，不动点迭代失败时细分首步。
        """
        if not has_history(self.tableau, state):
            if self.tableau.r == 1:
                return self._first_step(state)
            raise StartupRequiredError(
                f"{self.tableau.name} needs startup before step {state.step_index}"
            )
        operator = self.operator(state.tau)
        ubar = extrapolate_stages(self.tableau, state, self.grid)
        solution = _solve(operator, self.model, state, ubar, self.settings)
        if is_residual_checks_enabled() and self.grid.n <= ORACLE_MAX_N:
            self._compare_with_dense(state, ubar, solution)
        return self._finish_step(state, operator, solution, nonlinear=False)

    @timed("advance_nonlinear")
    def advance_nonlinear(self, state: SimulationState) -> Tuple[SimulationState, StepDiagnostics]:
        """用非线性格式（Ū = U）推进一步"""
        return self._nonlinear_step(state)

    def advance_linear(self, state: SimulationState) -> Tuple[SimulationState, StepDiagnostics]:
        """用 Ū_i = u_1^[n] 的线性 SAV 格式推进一步，不需要历史值"""
        operator = self.operator(state.tau)
        start = self.grid.inverse(state.u_ext[0])
        solution = _solve(operator, self.model, state, [start] * self.tableau.s, self.settings)
        return self._finish_step(state, operator, solution, nonlinear=False)

    def _nonlinear_step(self, state: SimulationState) -> Tuple[SimulationState, StepDiagnostics]:
        operator = self.operator(state.tau)
        solution = solve_stages_nonlinear(
            self.tableau, self.model, self.grid, state, self.settings, operator
        )
        return self._finish_step(state, operator, solution, nonlinear=True)

    def _first_step(self, state: SimulationState) -> Tuple[SimulationState, StepDiagnostics]:
        try:
            return self._nonlinear_step(state)
        except (NonConvergenceError, ArithmeticError) as e:
            logger.warning(f"First step of {self.tableau.name} failed at tau={state.tau:g} ({e})")
        for level in range(1, MAX_SUBSTEP_LEVEL + 1):
            try:
                return self.substepped_start(state, 2 ** level)
            except (NonConvergenceError, ArithmeticError) as e:
                logger.debug(f"Startup with {2 ** level} substeps failed: {e}")
        raise StartupError(
            f"{self.tableau.name} could not start even with {2 ** MAX_SUBSTEP_LEVEL} substeps",
            step_index=state.step_index,
        )

    def substepped_start(
            self,
            state: SimulationState,
            substeps: int,
    ) -> Tuple[SimulationState, StepDiagnostics]:
        """
        r=1 格式的细分首步

        用本格式的非线性版本依次积分到 c_j τ 与 τ，每段分成 substeps 个子步；
        各节点上的解作为下一步 Lagrange 外推的级值。

        :raises StartupError: 子步的不动点迭代失败，或 Lagrange 节点不在 [0, 1] 内
        """
        tableau = self.tableau
        if tableau.r != 1:
            raise StructuralError(f"substepped start needs r=1, got r={tableau.r}")
        lagrange = tableau.extrapolation == ExtrapolationKind.LAGRANGE
        if lagrange and (np.any(tableau.c < 0.0) or np.any(tableau.c > 1.0)):
            raise StartupError(f"{tableau.name}: stage nodes {tableau.c.tolist()} leave [0, 1]")
        targets = [1.0]
        if lagrange:
            for c in tableau.c:
                if all(abs(c - t) > NODE_TOL for t in targets):
                    targets.append(float(c))
            targets.sort()
        current = state
        clock = 0.0
        at_nodes = {}
        iterations, difference = 0, 0.0
        for target in targets:
            if target > clock:
                h = (target - clock) * state.tau / substeps
                operator = StageOperator(tableau, self.model, self.grid, h)
                current = replace(current, tau=h)
                for _ in range(substeps):
                    solution = solve_stages_nonlinear(
                        tableau, self.model, self.grid, current, self.settings, operator
                    )
                    current = self._update_state(current, operator, solution)
                    iterations += solution.stats.iterations
                    difference = max(difference, solution.stats.final_residual)
            at_nodes[target] = current.u_ext[0]
            clock = target
        stats = StageSolveStats(iterations, difference)
        new_state = SimulationState(
            u_ext=current.u_ext,
            z_ext=current.z_ext,
            tau=state.tau,
            step_index=state.step_index + 1,
            u_stage_prev=tuple(
                at_nodes[min(targets, key=lambda t: abs(t - c))] for c in tableau.c
            ) if lagrange else (),
            u_prev_ext=state.u_ext[0],
        )
        record_stage_solve(iterations, difference)
        logger.info(f"{tableau.name} started with {substeps} substeps per segment")
        return new_state, self.diagnostics(new_state, stats, nonlinear=True)

    def _compare_with_dense(self, state, ubar, solution):
        u_dense, z_dense = dense_stage_solve(self.tableau, self.model, self.grid, state, ubar)
        scale = max(1.0, float(np.max(np.abs(u_dense))))
        mismatch = max(
            float(np.max(np.abs(solution.u_hat - u_dense))) / scale,
            float(np.max(np.abs(solution.z - z_dense))) / max(1.0, float(np.max(np.abs(z_dense)))),
        )
        if mismatch > STAGE_RESIDUAL_TOL:
            logger.error(f"Stage solve deviates from the dense solve by {mismatch:.3e}")
            raise VerificationError(
                f"stage solve deviates from the dense solve by {mismatch:.3e} "
                f"at step {state.step_index}"
            )

    def diagnostics(
            self,
            state: SimulationState,
            stats: Optional[StageSolveStats] = None,
            nonlinear: bool = False,
    ) -> StepDiagnostics:
        """当前状态的能量、质量和极值"""
        u = self.grid.inverse(state.u_ext[0])
        return StepDiagnostics(
            step_index=state.step_index,
            time=state.time,
            energy=discrete_energy(self.tableau, self.model, self.grid, state),
            original_energy=original_energy(self.model, self.grid, u),
            mass=total_mass(self.grid, state),
            u_max=float(np.max(u)),
            u_min=float(np.min(u)),
            stats=stats,
            nonlinear=nonlinear,
        )


def startup(
        tableau: GltdTableau,
        model: GradientFlowModel,
        grid: SpectralGrid,
        u0: np.ndarray,
        tau: float,
        settings: Optional[SolverConfig] = None,
) -> SimulationState:
    """见 :meth:`SavGlIntegrator.startup`"""
    return SavGlIntegrator(tableau, model, grid, settings).startup(u0, tau)


def advance(
        tableau: GltdTableau,
        model: GradientFlowModel,
        grid: SpectralGrid,
        state: SimulationState,
        settings: Optional[SolverConfig] = None,
) -> Tuple[SimulationState, StepDiagnostics]:
    """见 :meth:`SavGlIntegrator.advance`"""
    return SavGlIntegrator(tableau, model, grid, settings).advance(state)
