"""
实验驱动

:class:`ExperimentRunner` 负责单条轨道（run_simulation）和收敛性研究（run_convergence）：
构造格式、网格和初值，逐步推进并把诊断量交给 sink。
"""

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, List, Optional, Sequence

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from .config import ExperimentConfig, TimeConfig
from .enums import SchemeName
from .errors import ConfigurationError
from .initial_data import init_field
from .sinks import CsvDiagnosticsSink, DiagnosticsSink, MemoryDiagnosticsSink
from .spectral import SpectralGrid, inner_product
from .stepper import SavGlIntegrator, SimulationState, initial_state
from .tableau import GltdTableau, builtin_tableau
from .utils.run_key import format_run_key
from .utils.serializers import FieldRawSerializer, FieldSnapshot, FieldTextSerializer, load_tableau
from .utils.statistics import get_run_statistics, reset_run_statistics, run_scope

CONVERGENCE_COLUMNS = ("K", "tau", "error", "order")


class RunReport(BaseModel):
    """单条轨道的运行报告"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    run_id: str
    scheme: str
    model: str
    n: int
    tau: float
    steps: int
    t_final: float
    wall_time: float
    max_stage_iterations: int
    total_stage_iterations: int
    energy_initial: float
    energy_final: float
    mass_drift: float
    files: List[str] = Field(default_factory=list)
    final_field: Optional[Any] = Field(default=None, exclude=True)
    final_state: Optional[Any] = Field(default=None, exclude=True)


class ErrorRow(BaseModel):
    """收敛表的一行"""
    steps: int
    tau: float
    error: float
    order: Optional[float] = None


class ErrorTable(BaseModel):
    """收敛性研究结果"""
    scheme: str
    model: str
    reference: str
    t_end: float
    rows: List[ErrorRow] = Field(default_factory=list)
    csv_path: Optional[str] = None

    @property
    def orders(self) -> List[float]:
        return [row.order for row in self.rows if row.order is not None]

    def write_csv(self, path) -> str:
        """写出 ``K,tau,error,order``，首行阶为空"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(CONVERGENCE_COLUMNS)
            for row in self.rows:
                writer.writerow([
                    row.steps,
                    repr(float(row.tau)),
                    repr(float(row.error)),
                    "" if row.order is None else repr(float(row.order)),
                ])
        self.csv_path = str(path)
        logger.info(f"Wrote convergence table to {path}")
        return str(path)


def observed_orders(steps: Sequence[int], errors: Sequence[float]) -> List[Optional[float]]:
    """相邻两行的观测阶 log(e1/e2)/log(K2/K1)，首行为空"""
    orders: List[Optional[float]] = [None]
    for i in range(1, len(steps)):
        if errors[i] <= 0.0 or errors[i - 1] <= 0.0:
            orders.append(None)
            continue
        orders.append(math.log(errors[i - 1] / errors[i]) / math.log(steps[i] / steps[i - 1]))
    return orders


def resolve_tableau(scheme: str) -> GltdTableau:
    """内置格式名或系数表文件"""
    try:
        return builtin_tableau(SchemeName.parse(scheme))
    except ValueError:
        path = Path(scheme)
        if not path.is_file():
            raise ConfigurationError(f"unknown scheme {scheme!r}")
        return load_tableau(path, name=path.stem)


def load_reference_field(path) -> FieldSnapshot:
    """读取参考解快照，后缀为 .bin 时按原始二进制解析"""
    path = Path(path)
    try:
        if path.suffix == FieldRawSerializer().suffix:
            return FieldRawSerializer().deserialize(path.read_bytes())
        return FieldTextSerializer().deserialize(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigurationError(f"cannot read reference {path}: {e}") from e


class ExperimentRunner:
    """
    数值实验驱动

    :param config: 实验配置
    :param sink_factory: (config, run_id) -> sink，默认写 CSV 文件
    """

    def __init__(
            self,
            config: ExperimentConfig,
            sink_factory: Optional[Callable[[ExperimentConfig, str], DiagnosticsSink]] = None,
    ):
        self.config = config
        self.sink_factory = sink_factory or (
            lambda cfg, run_id: CsvDiagnosticsSink(cfg.outputs, stem=run_id)
        )

    def make_grid(self, config: Optional[ExperimentConfig] = None) -> SpectralGrid:
        config = config or self.config
        return SpectralGrid(config.grid.n, config.grid.domain_length, workers=config.solver.threads)

    def run_simulation(
            self,
            config: Optional[ExperimentConfig] = None,
            sink: Optional[DiagnosticsSink] = None,
    ) -> RunReport:
        """
        启动后推进到 t_end，每步把诊断量交给 sink，在配置的时刻输出快照

        第 0 行按 u0 的滞后副本 (u0, …, u0) 和 z0 计算 Υ；r≥2 时第 1 行来自伴随格式起步，
        其 θ 取 :func:`~sav_gl.stepper.companion_theta`，保证第 1 行的 Υ 不超过第 0 行。

        :raises NonConvergenceError: 级方程求解失败，带步数与统计
        """
        config = config or self.config
        tableau = resolve_tableau(config.scheme)
        grid = self.make_grid(config)
        tau, steps = config.time.resolve()
        run_id = format_run_key(tableau.name, config.model.kind.value, steps=steps)
        sink = sink or self.sink_factory(config, run_id)
        u0 = init_field(config.init, grid, config.model.epsilon)
        integrator = SavGlIntegrator(tableau, config.model, grid, config.solver)
        snapshot_times = sorted(config.outputs.snapshot_times)
        reset_run_statistics(run_id)
        started = time.perf_counter()
        with run_scope(run_id), sink:
            state = initial_state(tableau, config.model, grid, u0, tau)
            first = integrator.diagnostics(state)
            sink.record(first)
            pending = self._emit_snapshots(sink, grid, state, snapshot_times, tau)
            last = first
            if steps > 0:
                if tableau.r >= 2:
                    state = integrator.startup(u0, tau)
                    last = integrator.diagnostics(state)
                    sink.record(last)
                    pending = self._emit_snapshots(sink, grid, state, pending, tau)
                while state.step_index < steps:
                    state, last = integrator.advance(state)
                    sink.record(last)
                    pending = self._emit_snapshots(sink, grid, state, pending, tau)
                    logger.debug(
                        f"{run_id} step {last.step_index}: energy={last.energy:.12e} "
                        f"iterations={last.stats.iterations if last.stats else 0}"
                    )
        wall_time = time.perf_counter() - started
        stats = get_run_statistics(run_id)
        report = RunReport(
            run_id=run_id,
            scheme=tableau.name,
            model=config.model.kind.value,
            n=grid.n,
            tau=tau,
            steps=state.step_index,
            t_final=state.time,
            wall_time=wall_time,
            max_stage_iterations=stats.get("max_iterations", 0),
            total_stage_iterations=stats.get("total_iterations", 0),
            energy_initial=first.energy,
            energy_final=last.energy,
            mass_drift=last.mass - first.mass,
            files=sink.paths,
            final_field=grid.inverse(state.u_ext[0]),
            final_state=state,
        )
        logger.info(
            f"Run {run_id} finished: {report.steps} steps to t={report.t_final:g} "
            f"in {wall_time:.2f}s, max stage iterations {report.max_stage_iterations}"
        )
        return report

    @staticmethod
    def _emit_snapshots(
            sink: DiagnosticsSink,
            grid: SpectralGrid,
            state: SimulationState,
            pending: List[float],
            tau: float,
    ) -> List[float]:
        remaining = []
        field = None
        for target in pending:
            if state.time >= target - 1e-9 * tau:
                if field is None:
                    field = grid.inverse(state.u_ext[0])
                sink.snapshot(state.time, field, grid.domain_length)
            else:
                remaining.append(target)
        return remaining

    def run_convergence(
            self,
            step_counts: Sequence[int],
            config: Optional[ExperimentConfig] = None,
            reference_config: Optional[ExperimentConfig] = None,
            csv_path: Optional[str] = None,
    ) -> ErrorTable:
        """
        参考解一次，之后对每个 K 计算终止时刻的 L² 误差和观测阶

        :param step_counts: 步数列表
        :param reference_config: 参考解配置，默认用 reference_scheme 与 reference_tau
        :param csv_path: 输出 CSV 路径
        :raises ConfigurationError: 参考解与被测解的终止时刻或网格不一致
        """
        config = config or self.config
        step_counts = sorted(int(k) for k in step_counts)
        if not step_counts or step_counts[0] <= 0:
            raise ConfigurationError(f"step counts must be positive, got {step_counts}")
        t_end = config.time.t_end
        reference_field, reference_name = self._reference(config, reference_config, t_end)
        grid = self.make_grid(config)
        if reference_field.shape != grid.shape:
            raise ConfigurationError(
                f"reference has shape {reference_field.shape}, grid is {grid.shape}"
            )

        def one(steps: int) -> float:
            run_config = config.model_copy(
                update={"time": TimeConfig(tau=t_end / steps, t_end=t_end, steps=steps)}
            )
            report = self.run_simulation(run_config, sink=MemoryDiagnosticsSink())
            difference = report.final_field - reference_field
            return math.sqrt(inner_product(grid, difference, difference))

        with ThreadPoolExecutor(max_workers=config.solver.threads) as executor:
            errors = list(executor.map(one, step_counts))
        orders = observed_orders(step_counts, errors)
        table = ErrorTable(
            scheme=resolve_tableau(config.scheme).name,
            model=config.model.kind.value,
            reference=reference_name,
            t_end=t_end,
            rows=[
                ErrorRow(steps=k, tau=t_end / k, error=e, order=o)
                for k, e, o in zip(step_counts, errors, orders)
            ],
        )
        for row in table.rows:
            logger.info(
                f"K={row.steps} tau={row.tau:.4g} error={row.error:.4e} "
                f"order={'-' if row.order is None else f'{row.order:.4f}'}"
            )
        if csv_path:
            table.write_csv(csv_path)
        return table

    def _reference(self, config, reference_config, t_end):
        if reference_config is None and config.reference:
            snapshot = load_reference_field(config.reference)
            if abs(snapshot.time - t_end) > 1e-12 * max(1.0, t_end):
                raise ConfigurationError(
                    f"reference snapshot is at t={snapshot.time}, runs end at t={t_end}"
                )
            return snapshot.values, str(config.reference)
        if reference_config is None:
            reference_config = config.model_copy(update={
                "scheme": config.reference_scheme,
                "time": TimeConfig(tau=config.reference_tau, t_end=t_end),
            })
        ref_tau, ref_steps = reference_config.time.resolve()
        if abs(ref_tau * ref_steps - t_end) > 1e-9 * max(1.0, t_end):
            raise ConfigurationError(
                f"reference ends at t={ref_tau * ref_steps}, runs end at t={t_end}"
            )
        logger.info(f"Computing reference with {reference_config.scheme}, tau={ref_tau:g}")
        report = self.run_simulation(reference_config, sink=MemoryDiagnosticsSink())
        return report.final_field, f"{report.scheme}@tau={ref_tau:g}"


def run_simulation(config: ExperimentConfig, sink: Optional[DiagnosticsSink] = None) -> RunReport:
    """见 :meth:`ExperimentRunner.run_simulation`"""
    return ExperimentRunner(config).run_simulation(sink=sink)


def run_convergence(
        config: ExperimentConfig,
        step_counts: Sequence[int],
        reference_config: Optional[ExperimentConfig] = None,
        csv_path: Optional[str] = None,
) -> ErrorTable:
    """见 :meth:`ExperimentRunner.run_convergence`"""
    return ExperimentRunner(config).run_convergence(
        step_counts, reference_config=reference_config, csv_path=csv_path
    )
