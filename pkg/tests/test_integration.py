"""
集成测试模块

端到端地测试收敛阶、能量耗散和质量守恒。运行较慢，可以用 ``-m "not slow"`` 跳过。
"""

import numpy as np
import pytest

from sav_gl.config import TimeConfig, preset_config
from sav_gl.experiment import ExperimentRunner
from sav_gl.initial_data import init_field
from sav_gl.sinks import MemoryDiagnosticsSink
from sav_gl.spectral import SpectralGrid
from sav_gl.utils.serializers import FieldRawSerializer, FieldSnapshot

SCHEMES = ["savgl1", "savgl2", "savgl3", "savgl4", "savgl5", "savgl6"]
ORDER_BRACKETS = {
    "savgl1": (0.85, 1.15),
    "savgl2": (1.85, 2.15),
    "savgl3": (1.85, 2.15),
    "savgl4": (1.85, 2.15),
    "savgl5": (2.7, 3.3),
    "savgl6": (3.7, 4.3),
}


@pytest.fixture(scope="module")
def reference_file(tmp_path_factory):
    """按预设计算一次参考解并写成二进制快照，模块内复用"""
    cache = {}

    def compute(preset: str) -> str:
        if preset not in cache:
            config = preset_config(preset)
            t_end = config.time.t_end
            reference_config = config.model_copy(update={
                "scheme": config.reference_scheme,
                "time": TimeConfig(tau=config.reference_tau, t_end=t_end),
            })
            report = ExperimentRunner(config).run_simulation(
                reference_config, sink=MemoryDiagnosticsSink()
            )
            path = tmp_path_factory.mktemp("reference") / f"{preset}.bin"
            snapshot = FieldSnapshot(report.final_field, config.grid.domain_length, t_end)
            path.write_bytes(FieldRawSerializer().serialize(snapshot))
            cache[preset] = str(path)
        return cache[preset]

    return compute


def convergence_table(preset: str, scheme: str, reference: str, steps):
    config = preset_config(preset).model_copy(update={"scheme": scheme, "reference": reference})
    return ExperimentRunner(config).run_convergence(steps)


def assert_orders_within(table, low: float, high: float):
    for order in table.orders:
        assert low <= order <= high, [(row.steps, row.error, row.order) for row in table.rows]


def short_run(preset: str, scheme: str, tau: float, steps: int = 30):
    config = preset_config(preset)
    config = config.model_copy(update={
        "scheme": scheme,
        "time": TimeConfig(tau=tau, t_end=steps * tau, steps=steps),
    })
    sink = MemoryDiagnosticsSink()
    ExperimentRunner(config).run_simulation(sink=sink)
    return config, sink


@pytest.mark.slow
@pytest.mark.integration
class TestAllenCahnConvergence:
    """AC 收敛阶测试类（ε=0.1，t=1.5，参考解 SAVGL6 τ=1e-4）"""

    @pytest.mark.parametrize("scheme", SCHEMES)
    def test_observed_orders(self, scheme, reference_file):
        """测试观测阶落在方法阶附近"""
        table = convergence_table("ac_accuracy", scheme, reference_file("ac_accuracy"), [80, 120, 160])
        assert_orders_within(table, *ORDER_BRACKETS[scheme])
        assert all(b.error < a.error for a, b in zip(table.rows, table.rows[1:]))

    def test_second_order_error_level(self, reference_file):
        """测试 SAVGL2 在 K=80 的误差与 1.2682e-3 相差不超过 1.5 倍"""
        table = convergence_table("ac_accuracy", "savgl2", reference_file("ac_accuracy"), [80])
        error = table.rows[0].error
        assert 1.2682e-3 / 1.5 <= error <= 1.2682e-3 * 1.5


@pytest.mark.slow
@pytest.mark.integration
class TestCahnHilliardConvergence:
    """CH 收敛阶测试类（ε=1，t=0.3）"""

    @pytest.mark.parametrize("scheme", SCHEMES[:5])
    def test_observed_orders(self, scheme, reference_file):
        """测试观测阶落在方法阶附近"""
        table = convergence_table("ch_accuracy", scheme, reference_file("ch_accuracy"), [120, 160, 200])
        assert_orders_within(table, *ORDER_BRACKETS[scheme])

    def test_fourth_order_radau(self, reference_file):
        """测试 SAVGL6 的观测阶在 [3.9, 4.4] 内"""
        table = convergence_table("ch_accuracy", "savgl6", reference_file("ch_accuracy"), [120, 160, 200])
        assert_orders_within(table, 3.9, 4.4)


@pytest.mark.slow
@pytest.mark.integration
class TestPhaseFieldCrystalConvergence:
    """PFC 收敛阶测试类（ε1=0，ε2=0.5，α=0.99，β=4，t=0.1，参考解 τ=5e-5）"""

    @pytest.mark.parametrize("scheme, low, high", [("savgl5", 2.9, 3.2), ("savgl6", 3.6, 4.1)])
    def test_radau_orders(self, scheme, low, high, reference_file):
        """测试 Radau IIA 格式的观测阶"""
        table = convergence_table("pfc_accuracy", scheme, reference_file("pfc_accuracy"), [240, 280, 320])
        assert_orders_within(table, low, high)


@pytest.mark.slow
@pytest.mark.integration
class TestEnergyDecay:
    """能量耗散与质量守恒测试类"""

    @pytest.mark.parametrize("tau", [0.1, 0.01])
    @pytest.mark.parametrize("preset", ["ac_coarsening", "ch_coarsening", "pfc_polycrystal_small"])
    @pytest.mark.parametrize("scheme", SCHEMES)
    def test_energy_nonincreasing(self, scheme, preset, tau):
        """测试每一步 Υ(n+1) ≤ Υ(n) + 1e-10·max(1, |Υ(n)|)，包括起步"""
        _, sink = short_run(preset, scheme, tau)
        energies = sink.column("energy", 2)
        assert len(energies) == 31
        slack = 1e-10 * np.maximum(1.0, np.abs(energies[:-1]))
        assert np.all(np.diff(energies) <= slack)

    @pytest.mark.parametrize("tau", [0.1, 0.01])
    @pytest.mark.parametrize("preset", ["ch_coarsening", "pfc_polycrystal_small"])
    @pytest.mark.parametrize("scheme", SCHEMES)
    def test_mass_conserved(self, scheme, preset, tau):
        """测试 |mass(t_n) - mass(t_0)| ≤ 1e-9·|mass(t_0)| + 1e-12"""
        config, sink = short_run(preset, scheme, tau)
        grid = SpectralGrid(config.grid.n, config.grid.domain_length)
        u0 = init_field(config.init, grid, config.model.epsilon)
        mass0 = float(grid.h ** 2 * np.sum(u0))
        drift = sink.column("mass", 2)
        assert np.max(np.abs(drift)) <= 1e-9 * abs(mass0) + 1e-12


@pytest.mark.slow
@pytest.mark.integration
class TestLongRuns:
    """长时间演化测试类"""

    @pytest.mark.parametrize("scheme", ["savgl1", "savgl3", "savgl5"])
    def test_allen_cahn_coarsening_energy(self, scheme, tmp_path):
        """测试 AC 粗化过程中离散能量单调下降"""
        config = preset_config("ac_coarsening").model_copy(update={"scheme": scheme})
        config = config.model_copy(update={
            "grid": config.grid.model_copy(update={"n": 32}),
            "time": config.time.model_copy(update={"t_end": 5.0}),
        })
        sink = MemoryDiagnosticsSink()
        ExperimentRunner(config).run_simulation(sink=sink)
        energies = sink.column("energy", 2)
        assert np.all(np.diff(energies) <= 1e-10 * abs(energies[0]))
        assert energies[-1] < energies[0]

    def test_cahn_hilliard_two_circles(self, tmp_path):
        """测试 CH 两个圆的质量守恒与能量下降"""
        config = preset_config("ch_coarsening")
        config = config.model_copy(update={
            "time": config.time.model_copy(update={"t_end": 0.2}),
            "outputs": config.outputs.model_copy(update={"out_dir": str(tmp_path)}),
        })
        sink = MemoryDiagnosticsSink()
        report = ExperimentRunner(config).run_simulation(sink=sink)
        mass_drift = sink.column("mass", 2)
        assert np.max(np.abs(mass_drift)) < 1e-10
        assert report.energy_final < report.energy_initial

    def test_polycrystal_small(self, tmp_path):
        """测试小区域多晶体的能量下降"""
        config = preset_config("pfc_polycrystal_small")
        config = config.model_copy(update={
            "time": config.time.model_copy(update={"t_end": 1.0}),
            "outputs": config.outputs.model_copy(update={"out_dir": str(tmp_path)}),
        })
        sink = MemoryDiagnosticsSink()
        ExperimentRunner(config).run_simulation(sink=sink)
        energies = sink.column("energy", 2)
        assert np.all(np.diff(energies) <= 1e-10 * abs(energies[0]))
        assert np.max(np.abs(sink.column("mass", 2))) < 1e-8
