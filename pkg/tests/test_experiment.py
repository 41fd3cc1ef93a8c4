"""
实验驱动与诊断输出测试模块
"""

import csv

import numpy as np
import pytest

from sav_gl.config import build_config
from sav_gl.errors import ConfigurationError
from sav_gl.experiment import (
    ErrorRow,
    ErrorTable,
    ExperimentRunner,
    load_reference_field,
    observed_orders,
    resolve_tableau,
    run_simulation,
)
from sav_gl.sinks import ENERGY_COLUMNS, CsvDiagnosticsSink, MemoryDiagnosticsSink
from sav_gl.tableau import builtin_tableau
from sav_gl.utils.serializers import dump_tableau


def small_config(tmp_path, **overrides):
    data = {
        "scheme": "savgl1",
        "model": {"kind": "allen_cahn", "epsilon": 0.5},
        "grid": {"n": 8},
        "time": {"t_end": 0.05, "steps": 5},
        "init": {"recipe": "sine_product", "amplitude": 0.5},
        "outputs": {"out_dir": str(tmp_path)},
    }
    data.update(overrides)
    return build_config(data)


class TestObservedOrders:
    """观测阶测试类"""

    def test_second_order(self):
        """测试误差按 τ² 下降"""
        orders = observed_orders([10, 20, 40], [1e-2, 2.5e-3, 6.25e-4])
        assert orders[0] is None
        assert orders[1] == pytest.approx(2.0)
        assert orders[2] == pytest.approx(2.0)

    def test_zero_error(self):
        """测试误差为零时不计算阶"""
        assert observed_orders([10, 20], [1e-3, 0.0]) == [None, None]


class TestErrorTable:
    """收敛表测试类"""

    def test_write_csv(self, tmp_path):
        """测试 CSV 列与首行空阶"""
        table = ErrorTable(
            scheme="savgl2", model="allen_cahn", reference="ref", t_end=1.0,
            rows=[ErrorRow(steps=10, tau=0.1, error=1e-2), ErrorRow(steps=20, tau=0.05, error=2.5e-3, order=2.0)],
        )
        path = table.write_csv(tmp_path / "conv.csv")
        with open(path, encoding="utf-8") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["K", "tau", "error", "order"]
        assert rows[1][3] == ""
        assert float(rows[2][3]) == 2.0
        assert table.orders == [2.0]


class TestResolveTableau:
    """格式解析测试类"""

    def test_builtin(self):
        """测试内置格式名"""
        assert resolve_tableau("SAVGL3").name == "savgl3"

    def test_file(self, tmp_path):
        """测试系数表文件"""
        path = tmp_path / "mine.tableau"
        dump_tableau(builtin_tableau("savgl4"), path)
        assert resolve_tableau(str(path)).s == 1

    def test_unknown(self):
        """测试未知格式"""
        with pytest.raises(ConfigurationError):
            resolve_tableau("no_such_scheme")


class TestRunSimulation:
    """单条轨道测试类"""

    def test_memory_sink(self, tmp_path):
        """测试诊断行数与初始行"""
        sink = MemoryDiagnosticsSink()
        report = ExperimentRunner(small_config(tmp_path)).run_simulation(sink=sink)
        assert report.steps == 5
        assert report.t_final == pytest.approx(0.05)
        assert len(sink.rows["energy"]) == 6
        assert sink.rows["mass"][0][2] == 0.0
        energies = sink.column("energy", 2)
        assert np.all(np.diff(energies) <= 1e-12)
        assert report.energy_final == energies[-1]

    def test_two_step_rows(self, tmp_path):
        """测试 r=2 格式的起步行"""
        sink = MemoryDiagnosticsSink()
        report = run_simulation(small_config(tmp_path, scheme="savgl2"), sink=sink)
        steps = sink.column("energy", 0)
        assert list(steps) == [0, 1, 2, 3, 4, 5]
        assert report.steps == 5

    def test_csv_outputs(self, tmp_path):
        """测试 CSV 文件与快照"""
        config = small_config(
            tmp_path,
            outputs={"out_dir": str(tmp_path), "snapshot_times": [0.03], "snapshot_format": "raw"},
        )
        report = ExperimentRunner(config).run_simulation()
        energy_path = tmp_path / "savgl1_allen_cahn_K5_energy.csv"
        assert str(energy_path) in report.files
        with open(energy_path, encoding="utf-8") as f:
            rows = list(csv.reader(f))
        assert tuple(rows[0]) == ENERGY_COLUMNS
        assert len(rows) == 7
        snapshots = list(tmp_path.glob("*snapshot_t0.03*.bin"))
        assert len(snapshots) == 1
        snapshot = load_reference_field(snapshots[0])
        assert snapshot.time == pytest.approx(0.03)
        assert snapshot.values.shape == (8, 8)

    def test_disabled_channel(self, tmp_path):
        """测试文件名为空的通道不输出"""
        config = small_config(tmp_path, outputs={"out_dir": str(tmp_path), "mass_csv": None})
        with CsvDiagnosticsSink(config.outputs, stem="x") as sink:
            assert not any(path.endswith("mass.csv") for path in sink.paths)
            assert any(path.endswith("x_energy.csv") for path in sink.paths)

    def test_report_json_excludes_fields(self, tmp_path):
        """测试报告序列化不含场数据"""
        report = run_simulation(small_config(tmp_path), sink=MemoryDiagnosticsSink())
        dumped = report.model_dump()
        assert "final_field" not in dumped
        assert report.final_field.shape == (8, 8)


class TestRunConvergence:
    """收敛性研究测试类"""

    def test_reference_run(self, tmp_path):
        """测试参考解计算与误差表"""
        config = small_config(
            tmp_path, time={"t_end": 0.04, "steps": 4}, reference_scheme="savgl6", reference_tau=0.002,
        )
        table = ExperimentRunner(config).run_convergence([2, 4], csv_path=str(tmp_path / "conv.csv"))
        assert [row.steps for row in table.rows] == [2, 4]
        assert table.rows[1].error < table.rows[0].error
        assert table.csv_path == str(tmp_path / "conv.csv")

    def test_reference_time_mismatch(self, tmp_path):
        """测试参考快照时刻与终止时刻不一致"""
        config = small_config(
            tmp_path, outputs={"out_dir": str(tmp_path), "snapshot_times": [0.05]},
        )
        ExperimentRunner(config).run_simulation()
        (snapshot,) = tmp_path.glob("*snapshot*.txt")
        mismatched = small_config(tmp_path, time={"t_end": 0.04, "steps": 4}, reference=str(snapshot))
        with pytest.raises(ConfigurationError):
            ExperimentRunner(mismatched).run_convergence([2, 4])

    def test_invalid_steps(self, tmp_path):
        """测试非正步数"""
        with pytest.raises(ConfigurationError):
            ExperimentRunner(small_config(tmp_path)).run_convergence([0, 4])

