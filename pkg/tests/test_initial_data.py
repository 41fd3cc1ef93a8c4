"""
初值构造测试模块
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from sav_gl.config import InitConfig
from sav_gl.enums import InitRecipe
from sav_gl.errors import ConfigurationError
from sav_gl.initial_data import init_field, polycrystal, random_field, two_circles
from sav_gl.spectral import SpectralGrid


class TestSimpleRecipes:
    """解析初值测试类"""

    def test_sine_product(self):
        """测试 sin(x)sin(y)"""
        grid = SpectralGrid(8)
        u = init_field(InitConfig(recipe=InitRecipe.SINE_PRODUCT, amplitude=0.5), grid)
        x, y = grid.coordinates
        assert_allclose(u, 0.5 * np.sin(x) * np.sin(y))

    def test_sine_cosine(self):
        """测试 sin(x)cos(y)"""
        grid = SpectralGrid(8)
        u = init_field(InitConfig(recipe=InitRecipe.SINE_COSINE, amplitude=0.4), grid)
        assert u[0, 0] == 0.0
        assert u[2, 0] == pytest.approx(0.4)


class TestRandomField:
    """随机初值测试类"""

    def test_reproducible(self):
        """测试相同种子得到相同初值"""
        grid = SpectralGrid(16)
        assert_array_equal(random_field(grid, 0.1, -0.05, 7), random_field(grid, 0.1, -0.05, 7))
        assert not np.array_equal(random_field(grid, 0.1, -0.05, 7), random_field(grid, 0.1, -0.05, 8))

    def test_range(self):
        """测试取值范围"""
        grid = SpectralGrid(32)
        u = init_field(InitConfig(recipe=InitRecipe.RANDOM, scale=0.1, offset=-0.05), grid)
        assert np.all(u >= -0.15)
        assert np.all(u < 0.05)


class TestTwoCircles:
    """两个圆测试类"""

    def test_values(self):
        """测试取值在 [0, 2] 内且圆心处接近 1"""
        grid = SpectralGrid(64)
        u = two_circles(grid, epsilon=0.1)
        assert np.all(u >= 0.0) and np.all(u <= 2.0)
        assert u.max() == pytest.approx(1.0, abs=1e-6)

    def test_box_too_small(self):
        """测试区域边长小于 2π"""
        with pytest.raises(ConfigurationError):
            two_circles(SpectralGrid(16, domain_length=math.pi), epsilon=0.1)


class TestPolycrystal:
    """多晶体初值测试类"""

    def test_background_and_grains(self):
        """测试背景为 φ0，晶粒内为晶格"""
        grid = SpectralGrid(100, domain_length=100.0)
        config = InitConfig(recipe=InitRecipe.POLYCRYSTAL, patch_size=10.0)
        u = init_field(config, grid)
        assert u[0, 0] == config.phi0
        assert u[10, 90] == config.phi0
        grain = u[33:43, 33:43]
        assert np.ptp(grain) > 0.2

    def test_patch_too_large(self):
        """测试晶粒超过 L/4"""
        grid = SpectralGrid(100, domain_length=100.0)
        with pytest.raises(ConfigurationError):
            polycrystal(grid, InitConfig(recipe=InitRecipe.POLYCRYSTAL, patch_size=40.0))

    def test_patch_smaller_than_lattice(self):
        """测试晶粒小于一个晶格周期"""
        grid = SpectralGrid(100, domain_length=100.0)
        with pytest.raises(ConfigurationError):
            polycrystal(grid, InitConfig(recipe=InitRecipe.POLYCRYSTAL, patch_size=5.0))
