"""
SAV-GL: 梯度流的线性无条件能量稳定时间积分器

以一般线性时间离散（GLTD）为骨架，结合标量辅助变量（SAV）方法和二维周期 Fourier
谱方法，求解 Allen-Cahn、Cahn-Hilliard 与相场晶体方程。

主要特性：
- 内置 SAVGL1..SAVGL6：one-leg θ、两步 one-leg、单级两步 RK、Radau IIA
- 相容性、代数稳定性、对角稳定性与 MRK 阶条件的数值校验
- 逐 Fourier 模态对角化的级方程求解（不完全迭代或精确约化）
- 离散能量、质量与极值诊断，CSV 与快照输出
- 收敛性研究与命令行工具

基本用法:

    tableau = builtin_tableau("savgl2")
    model = GradientFlowModel(kind=ModelKind.ALLEN_CAHN, epsilon=0.1)
    grid = SpectralGrid(64)
    integrator = SavGlIntegrator(tableau, model, grid)
    state = integrator.startup(u0, tau=0.01)
    state, diagnostics = integrator.advance(state)

    # 命令行
    sav_gl verify savgl5
    sav_gl run preset:ac_coarsening --out-dir out
"""

from .config import (
    ExperimentConfig,
    GridConfig,
    InitConfig,
    ModelConfig,
    OutputConfig,
    SolverConfig,
    TimeConfig,
    disable_residual_checks,
    enable_residual_checks,
    is_residual_checks_enabled,
    load_config,
    parse_config,
    preset_config,
)
from .enums import (
    ExtrapolationKind,
    InitRecipe,
    ModelKind,
    OperatorKind,
    SchemeName,
    SnapshotFormat,
    StabilityKind,
    StageSolver,
)
from .errors import (
    ConfigurationError,
    NonConvergenceError,
    NumericalContaminationError,
    PreconditionError,
    SavBreakdownError,
    SavGlError,
    SingularSystemError,
    StartupError,
    StartupRequiredError,
    StructuralError,
    TableauFormatError,
    VerificationError,
)
from .experiment import ErrorTable, ExperimentRunner, RunReport, run_convergence, run_simulation
from .initial_data import init_field
from .models import (
    GradientFlowModel,
    default_c0,
    energy_f1,
    original_energy,
    sav_init,
    sav_w,
    variational_derivative_f1,
)
from .spectral import (
    SpectralGrid,
    apply_symbol,
    coeff_inner_product,
    forward,
    inner_product,
    inverse,
    operator_symbol,
)
from .stepper import (
    SavGlIntegrator,
    SimulationState,
    StageSolveStats,
    StepDiagnostics,
    advance,
    companion_theta,
    dense_stage_solve,
    discrete_energy,
    extrapolate_stages,
    solve_stages,
    solve_stages_nonlinear,
    startup,
    total_mass,
)
from .tableau import (
    GltdTableau,
    StabilityCertificate,
    builtin_tableau,
    certify_tableau,
    check_algebraic_stability,
    check_consistency,
    check_diagonal_stability,
    check_mrk_order_conditions,
    mrk,
    one_leg,
    one_leg_theta,
    one_leg_two_step,
    radau_iia,
    two_step_rk_one_stage,
)
from .utils.statistics import get_run_statistics, reset_run_statistics

__version__ = "1.0.0"

__all__ = [
    # 配置
    "ExperimentConfig",
    "GridConfig",
    "InitConfig",
    "ModelConfig",
    "OutputConfig",
    "SolverConfig",
    "TimeConfig",
    "enable_residual_checks",
    "disable_residual_checks",
    "is_residual_checks_enabled",
    "load_config",
    "parse_config",
    "preset_config",
    # 枚举
    "ExtrapolationKind",
    "InitRecipe",
    "ModelKind",
    "OperatorKind",
    "SchemeName",
    "SnapshotFormat",
    "StabilityKind",
    "StageSolver",
    # 异常
    "SavGlError",
    "StructuralError",
    "PreconditionError",
    "SavBreakdownError",
    "NumericalContaminationError",
    "SingularSystemError",
    "StartupRequiredError",
    "NonConvergenceError",
    "StartupError",
    "ConfigurationError",
    "TableauFormatError",
    "VerificationError",
    # 系数表
    "GltdTableau",
    "StabilityCertificate",
    "builtin_tableau",
    "certify_tableau",
    "check_consistency",
    "check_algebraic_stability",
    "check_diagonal_stability",
    "check_mrk_order_conditions",
    "one_leg",
    "one_leg_theta",
    "one_leg_two_step",
    "mrk",
    "radau_iia",
    "two_step_rk_one_stage",
    # 模型
    "GradientFlowModel",
    "energy_f1",
    "variational_derivative_f1",
    "sav_w",
    "sav_init",
    "default_c0",
    "original_energy",
    # 谱方法
    "SpectralGrid",
    "forward",
    "inverse",
    "operator_symbol",
    "inner_product",
    "coeff_inner_product",
    "apply_symbol",
    # 时间推进
    "SavGlIntegrator",
    "SimulationState",
    "StageSolveStats",
    "StepDiagnostics",
    "extrapolate_stages",
    "solve_stages",
    "solve_stages_nonlinear",
    "dense_stage_solve",
    "advance",
    "startup",
    "companion_theta",
    "discrete_energy",
    "total_mass",
    # 实验
    "init_field",
    "ExperimentRunner",
    "RunReport",
    "ErrorTable",
    "run_simulation",
    "run_convergence",
    # 统计
    "get_run_statistics",
    "reset_run_statistics",
]
