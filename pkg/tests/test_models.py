"""
梯度流模型测试模块

测试非线性能量、变分导数、SAV 变量和 C0 下界。
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from pydantic import ValidationError

from sav_gl.enums import ModelKind
from sav_gl.errors import PreconditionError, SavBreakdownError
from sav_gl.models import (
    GradientFlowModel,
    default_c0,
    energy_f1,
    original_energy,
    resolve_c0,
    sav_init,
    sav_w,
    variational_derivative_f1,
)
from sav_gl.spectral import SpectralGrid, inner_product

MODELS = {
    "allen_cahn": GradientFlowModel(kind=ModelKind.ALLEN_CAHN, epsilon=0.1, beta=2.0),
    "cahn_hilliard": GradientFlowModel(kind=ModelKind.CAHN_HILLIARD, epsilon=1.0, beta=2.0),
    "phase_field_crystal": GradientFlowModel(
        kind=ModelKind.PHASE_FIELD_CRYSTAL, epsilon1=0.1, epsilon2=0.5, alpha=0.99, beta=4.0,
    ),
}


def smooth_fields(grid: SpectralGrid):
    x, y = grid.coordinates
    u = 0.3 * np.sin(x) * np.cos(2.0 * y) + 0.1
    v = np.cos(x + y) + 0.5 * np.sin(3.0 * x)
    return u, v


class TestGradientFlowModel:
    """模型描述测试类"""

    def test_frozen(self):
        """测试模型不可变"""
        model = GradientFlowModel()
        with pytest.raises(ValidationError):
            model.epsilon = 0.2

    def test_alpha_range(self):
        """测试 α 必须在 (0, 1) 内"""
        with pytest.raises(ValidationError):
            GradientFlowModel(kind=ModelKind.PHASE_FIELD_CRYSTAL, alpha=1.0)

    def test_unknown_field(self):
        """测试未知参数"""
        with pytest.raises(ValidationError):
            GradientFlowModel(gamma=1.0)

    def test_mass_conserving_kinds(self):
        """测试 H⁻¹ 梯度流标记"""
        assert not MODELS["allen_cahn"].is_h_minus_one
        assert MODELS["cahn_hilliard"].is_h_minus_one
        assert MODELS["phase_field_crystal"].is_h_minus_one


class TestEnergy:
    """非线性能量测试类"""

    def test_allen_cahn_zero_field(self):
        """测试 u=0 时 F1 = |Ω|/4"""
        grid = SpectralGrid(8)
        assert energy_f1(MODELS["allen_cahn"], np.zeros(grid.shape), grid) == pytest.approx(
            0.25 * grid.area
        )

    @pytest.mark.parametrize("name", sorted(MODELS))
    def test_variational_derivative(self, name):
        """测试变分导数与 10 个随机方向上的中心差分一致"""
        model = MODELS[name]
        grid = SpectralGrid(16)
        u, _ = smooth_fields(grid)
        derivative = variational_derivative_f1(model, u, grid)
        scale = max(1.0, abs(energy_f1(model, u, grid)))
        rng = np.random.default_rng(7)
        h = 1e-5
        for _ in range(10):
            v = rng.uniform(-1.0, 1.0, grid.shape)
            difference = (
                    energy_f1(model, u + h * v, grid) - energy_f1(model, u - h * v, grid)
            ) / (2.0 * h)
            analytic = inner_product(grid, derivative, v)
            norm_v = math.sqrt(inner_product(grid, v, v))
            assert difference == pytest.approx(analytic, rel=1e-6, abs=1e-8 * norm_v * scale)

    def test_original_energy_zero_field(self):
        """测试 u=0 时原始能量只剩 F1"""
        grid = SpectralGrid(8)
        model = MODELS["allen_cahn"]
        assert original_energy(model, grid, np.zeros(grid.shape)) == pytest.approx(0.25 * grid.area)

    def test_original_energy_quadratic_part(self):
        """测试原始能量的二次项"""
        grid = SpectralGrid(16)
        model = GradientFlowModel(kind=ModelKind.ALLEN_CAHN, epsilon=0.5, beta=0.0)
        x, y = grid.coordinates
        u = np.sin(x)
        # ½ ε² |∇u|² = ½ · ¼ · ∫cos²x = π²/4
        quadratic = original_energy(model, grid, u) - energy_f1(model, u, grid)
        assert quadratic == pytest.approx(math.pi ** 2 / 4.0, rel=1e-12)


class TestSav:
    """SAV 变量测试类"""

    def test_c0_allen_cahn(self):
        """测试 AC 的 C0 = |Ω|(β²/4 + β/2)"""
        assert default_c0(MODELS["allen_cahn"], 10.0) == pytest.approx(20.0)

    def test_c0_invalid_area(self):
        """测试非正面积"""
        with pytest.raises(PreconditionError):
            default_c0(MODELS["allen_cahn"], 0.0)

    @pytest.mark.parametrize("name", sorted(MODELS))
    def test_c0_bounds_energy(self, name):
        """测试 F1 + C0 对大幅值随机场仍为正"""
        model = MODELS[name]
        grid = SpectralGrid(16)
        rng = np.random.default_rng(5)
        for scale in (0.1, 1.0, 3.0):
            u = scale * rng.standard_normal(grid.shape)
            assert energy_f1(model, u, grid) + resolve_c0(model, grid) > 0.0

    def test_sav_init_value(self):
        """测试 z(0) = √(F1 + C0)"""
        grid = SpectralGrid(8)
        z0 = sav_init(MODELS["allen_cahn"], np.zeros(grid.shape), grid)
        assert z0 == pytest.approx(math.sqrt(2.25 * grid.area))

    def test_sav_breakdown(self):
        """测试 F1 + C0 <= 0"""
        grid = SpectralGrid(8)
        model = GradientFlowModel(kind=ModelKind.ALLEN_CAHN, beta=2.0, c0=0.0)
        with pytest.raises(SavBreakdownError) as excinfo:
            sav_init(model, np.ones(grid.shape), grid)
        assert excinfo.value.value < 0.0

    def test_sav_w_homogeneity(self):
        """测试 W 关于 1/z 齐次"""
        grid = SpectralGrid(16)
        u, _ = smooth_fields(grid)
        model = MODELS["phase_field_crystal"]
        assert_array_equal(sav_w(model, u, 2.0, grid), sav_w(model, u, 1.0, grid) / 2.0)
        assert_allclose(sav_w(model, u, 1.0, grid), variational_derivative_f1(model, u, grid))

    def test_sav_w_nonpositive_z(self):
        """测试 z <= 0"""
        grid = SpectralGrid(8)
        with pytest.raises(SavBreakdownError):
            sav_w(MODELS["allen_cahn"], np.zeros(grid.shape), 0.0, grid)
