"""
配置测试模块

测试键值配置解析、预设、时间步解析和全局级残差检查开关。
"""

import pytest

from sav_gl.config import (
    ExperimentConfig,
    TimeConfig,
    disable_residual_checks,
    enable_residual_checks,
    is_residual_checks_enabled,
    load_config,
    parse_config,
    preset_config,
    preset_names,
)
from sav_gl.enums import InitRecipe, ModelKind, SnapshotFormat, StageSolver
from sav_gl.errors import ConfigurationError

SAMPLE = """
# Allen-Cahn 精度算例
scheme = SAVGL2
model.kind = allen_cahn
model.epsilon = 0.1
grid.n = 32
time.t_end = 1.5
time.steps = 80
init.recipe = sine_product
outputs.snapshot_times = 0.5, 1.5
outputs.snapshot_format = raw
solver.stage_solver = direct
"""


class TestParseConfig:
    """键值配置解析测试类"""

    def test_sample(self):
        """测试完整配置"""
        config = parse_config(SAMPLE)
        assert config.scheme == "savgl2"
        assert config.model.kind == ModelKind.ALLEN_CAHN
        assert config.model.epsilon == 0.1
        assert config.grid.n == 32
        assert config.time.resolve() == (1.5 / 80, 80)
        assert config.init.recipe == InitRecipe.SINE_PRODUCT
        assert config.outputs.snapshot_times == [0.5, 1.5]
        assert config.outputs.snapshot_format == SnapshotFormat.RAW
        assert config.solver.stage_solver == StageSolver.DIRECT
        assert config.is_builtin_scheme

    def test_defaults(self):
        """测试空配置取默认值"""
        config = parse_config("")
        assert config == ExperimentConfig()
        assert config.solver.tol == 1e-12
        assert config.solver.max_iters == 200
        assert config.solver.relative_tolerance is False

    def test_relative_tolerance(self):
        """测试相对停止准则开关"""
        config = parse_config("solver.relative_tolerance = true")
        assert config.solver.relative_tolerance is True

    def test_unknown_key(self):
        """测试未知键报告行号"""
        with pytest.raises(ConfigurationError, match="line 2"):
            parse_config("scheme = savgl1\ngrid.bogus = 3\n")

    def test_unknown_section(self):
        """测试未知分组"""
        with pytest.raises(ConfigurationError):
            parse_config("mesh.n = 8")

    def test_duplicate_key(self):
        """测试重复键"""
        with pytest.raises(ConfigurationError, match="duplicate"):
            parse_config("grid.n = 8\ngrid.n = 16\n")

    def test_missing_equals(self):
        """测试缺少等号"""
        with pytest.raises(ConfigurationError, match="line 1"):
            parse_config("scheme savgl1")

    def test_invalid_value(self):
        """测试非法取值"""
        with pytest.raises(ConfigurationError):
            parse_config("grid.n = 7")
        with pytest.raises(ConfigurationError):
            parse_config("time.tau = -0.1")

    def test_unknown_scheme(self):
        """测试未知格式名"""
        with pytest.raises(ConfigurationError):
            parse_config("scheme = savgl9")

    def test_scheme_file(self, tmp_path):
        """测试系数表文件作为格式"""
        path = tmp_path / "custom.tableau"
        path.write_text("s = 1\n", encoding="utf-8")
        config = parse_config(f"scheme = {path}")
        assert config.scheme == str(path)
        assert not config.is_builtin_scheme


class TestTimeConfig:
    """时间配置测试类"""

    def test_steps_override_tau(self):
        """测试给出步数时 τ = t_end / K"""
        assert TimeConfig(tau=0.3, t_end=2.0, steps=8).resolve() == (0.25, 8)

    def test_tau_only(self):
        """测试只给出 τ"""
        tau, steps = TimeConfig(tau=0.1, t_end=30.0).resolve()
        assert tau == 0.1
        assert steps == 300

    def test_non_multiple(self):
        """测试 t_end 不是 τ 的整数倍"""
        assert TimeConfig(tau=0.3, t_end=1.0).resolve() == (0.3, 3)


class TestPresets:
    """预设测试类"""

    @pytest.mark.parametrize("name", preset_names())
    def test_presets_load(self, name):
        """测试全部预设可以构造"""
        config = preset_config(name)
        assert config.grid.n % 2 == 0
        tau, steps = config.time.resolve()
        assert tau > 0.0 and steps > 0

    def test_polycrystal_presets(self):
        """测试多晶体预设的区域与晶粒尺寸"""
        full = preset_config("pfc_polycrystal")
        small = preset_config("pfc_polycrystal_small")
        assert (full.grid.n, full.grid.domain_length, full.init.patch_size) == (400, 400.0, 40.0)
        assert (small.grid.n, small.grid.domain_length, small.init.patch_size) == (100, 100.0, 10.0)

    def test_unknown_preset(self):
        """测试未知预设"""
        with pytest.raises(ConfigurationError):
            preset_config("nope")

    def test_load_preset(self):
        """测试 preset: 前缀"""
        assert load_config("preset:ch_accuracy").scheme == "savgl6"

    def test_load_missing_file(self, tmp_path):
        """测试配置文件不存在"""
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / "missing.cfg")

    def test_load_file(self, tmp_path):
        """测试读取配置文件"""
        path = tmp_path / "run.cfg"
        path.write_text(SAMPLE, encoding="utf-8")
        assert load_config(path).grid.n == 32


class TestResidualSwitch:
    """全局级残差检查开关测试类"""

    def teardown_method(self):
        """每个测试后关闭开关"""
        disable_residual_checks()

    def test_enable_disable(self):
        """测试启用和禁用"""
        assert is_residual_checks_enabled() is False
        enable_residual_checks()
        assert is_residual_checks_enabled() is True
        disable_residual_checks()
        assert is_residual_checks_enabled() is False
