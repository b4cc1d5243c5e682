"""Perception kernels: pointwise evaluation, Fourier transforms, grids."""

import numpy as np
import pytest
from scipy.special import j1

from aggrsim.geometry import TorusGeometry
from aggrsim.kernels import KernelSpec, eval_kernel, kernel_fourier, sample_kernel_grid

GEOM1 = TorusGeometry(dimension=1, side=1.0)
GEOM2 = TorusGeometry(dimension=2, side=1.0)


def spec1(**kw):
    base = dict(radius=0.1, profile="indicator", cos_alpha=-1.0, normalization="raw")
    base.update(kw)
    return KernelSpec(**base)


# ---------------------------------------------------------------- pointwise


def test_indicator_inside_outside():
    s = spec1()
    assert eval_kernel(np.array([0.05]), s) == 1.0
    assert eval_kernel(np.array([0.1]), s) == 1.0  # closed ball
    assert eval_kernel(np.array([0.100001]), s) == 0.0
    assert eval_kernel(np.array([0.0]), s) == 1.0


def test_bump_profile_values():
    s = spec1(profile="bump", radius=0.2)
    # w(s) = (1 - (s/R)^2)^2
    assert eval_kernel(np.array([0.0]), s) == pytest.approx(1.0)
    assert eval_kernel(np.array([0.1]), s) == pytest.approx((1 - 0.25) ** 2)
    assert eval_kernel(np.array([0.2]), s) == pytest.approx(0.0)
    assert eval_kernel(np.array([0.3]), s) == 0.0


def test_directed_gate_counts_trailing_mass():
    # delta = observer - neighbor; a right-mover (v > 0) counts the
    # neighbor it is moving away from (delta > 0), not the one ahead.
    s = spec1(cos_alpha=0.0)
    behind = eval_kernel(np.array([0.05]), s, v=np.array([1.0]))
    ahead = eval_kernel(np.array([-0.05]), s, v=np.array([1.0]))
    assert behind == 1.0 and ahead == 0.0
    # mirrored for a left-mover
    assert eval_kernel(np.array([-0.05]), s, v=np.array([-1.0])) == 1.0
    assert eval_kernel(np.array([0.05]), s, v=np.array([-1.0])) == 0.0


def test_directed_gate_2d_cone():
    s = KernelSpec(radius=0.2, profile="indicator", cos_alpha=np.cos(np.pi / 4), normalization="raw")
    v = np.array([1.0, 0.0])
    assert eval_kernel(np.array([0.1, 0.0]), s, v=v) == 1.0  # on the cone axis
    assert eval_kernel(np.array([0.1, 0.05]), s, v=v) == 1.0  # ~27 deg: inside
    assert eval_kernel(np.array([0.0, 0.1]), s, v=v) == 0.0  # perpendicular: outside
    assert eval_kernel(np.array([-0.1, 0.0]), s, v=v) == 0.0


def test_directed_requires_velocity_and_heading():
    s = spec1(cos_alpha=0.0)
    with pytest.raises(ValueError):
        eval_kernel(np.array([0.05]), s)
    with pytest.raises(ValueError):
        eval_kernel(np.array([0.05]), s, v=np.array([0.0]))


def test_unit_normalization_scale():
    s = spec1(normalization="unit")
    # 1D indicator integral = 2R = 0.2 -> scaled value 5 inside
    assert eval_kernel(np.array([0.05]), s) == pytest.approx(5.0)
    s2 = KernelSpec(radius=0.1, profile="indicator", cos_alpha=0.0, normalization="unit")
    # directed halves the integral -> scale 10
    assert eval_kernel(np.array([0.05]), s2, v=np.array([1.0])) == pytest.approx(10.0)


def test_spec_validation():
    for bad in (
        dict(radius=0.0),
        dict(radius=-1.0),
        dict(profile="box"),
        dict(normalization="l2"),
        dict(cos_alpha=1.5),
    ):
        with pytest.raises(ValueError):
            spec1(**bad)


# ---------------------------------------------------------------- Fourier


def test_fourier_indicator_closed_form():
    # W-hat(xi) = 2 sin(xi R)/xi for the raw undirected 1D indicator
    s = spec1(radius=0.1)
    got = kernel_fourier(s, GEOM1, 8)
    xi = 2.0 * np.pi * np.arange(9) / GEOM1.side
    expected = np.empty(9)
    expected[0] = 2 * s.radius
    expected[1:] = 2.0 * np.sin(xi[1:] * s.radius) / xi[1:]
    assert np.allclose(got, expected, atol=1e-8)
    assert got[1] == pytest.approx(0.18710, abs=1e-5)


def test_fourier_unit_normalization_divides_integral():
    raw = kernel_fourier(spec1(), GEOM1, 5)
    unit = kernel_fourier(spec1(normalization="unit"), GEOM1, 5)
    assert unit[0] == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(unit, raw / (2 * 0.1), atol=1e-10)


def test_fourier_directed_half_support():
    # one-sided support halves the zero mode and the cosine transform
    s = spec1(cos_alpha=0.0)
    got = kernel_fourier(s, GEOM1, 6)
    xi = 2.0 * np.pi * np.arange(7)
    expected = np.empty(7)
    expected[0] = s.radius
    expected[1:] = np.sin(xi[1:] * s.radius) / xi[1:]
    assert np.allclose(got, expected, atol=1e-8)


def test_fourier_bump_quadrature_oracle():
    s = spec1(profile="bump", radius=0.15)
    got = kernel_fourier(s, GEOM1, 4)
    x = np.linspace(-0.5, 0.5, 200001)
    w = np.where(np.abs(x) <= s.radius, (1 - (x / s.radius) ** 2) ** 2, 0.0)
    for n in range(5):
        oracle = np.trapezoid(w * np.cos(2 * np.pi * n * x), x)
        assert got[n] == pytest.approx(oracle, abs=1e-6)


def test_fourier_2d_indicator_bessel_oracle():
    s = KernelSpec(radius=0.2, profile="indicator", cos_alpha=-1.0, normalization="raw")
    got = kernel_fourier(s, GEOM2, 4)
    assert got[0] == pytest.approx(np.pi * s.radius**2, abs=1e-9)
    for n in range(1, 5):
        xi = 2.0 * np.pi * n
        oracle = 2.0 * np.pi * s.radius * j1(xi * s.radius) / xi
        assert got[n] == pytest.approx(oracle, abs=1e-8)


def test_fourier_errors():
    with pytest.raises(ValueError):
        kernel_fourier(spec1(radius=0.5), GEOM1, 3)
    with pytest.raises(ValueError):
        kernel_fourier(KernelSpec(radius=0.1, cos_alpha=0.0), GEOM2, 3)


# ---------------------------------------------------------------- grids


def test_sample_grid_matches_pointwise():
    s = spec1(radius=0.13, profile="bump")
    m = 64
    values = sample_kernel_grid(s, GEOM1, m)
    dx = GEOM1.side / m
    offsets = np.arange(m) * dx
    offsets = np.where(offsets > 0.5, offsets - 1.0, offsets)
    for k in (0, 1, 5, 32, 60, 63):
        assert values[k] == pytest.approx(
            eval_kernel(np.array([offsets[k]]), s), abs=1e-12
        )


def test_sample_grid_unit_sums_to_one():
    for side in (-1, 0, 1):
        s = spec1(normalization="unit", cos_alpha=0.0 if side else -1.0)
        values = sample_kernel_grid(s, GEOM1, 100, side=side)
        assert values.sum() * (1.0 / 100) == pytest.approx(1.0, abs=1e-14)


def test_sample_grid_one_sided_supports():
    s = spec1(radius=0.1)
    m = 50
    dx = 1.0 / m
    plus = sample_kernel_grid(s, GEOM1, m, side=+1)
    minus = sample_kernel_grid(s, GEOM1, m, side=-1)
    full = sample_kernel_grid(s, GEOM1, m, side=0)
    offsets = np.where(np.arange(m) * dx > 0.5, np.arange(m) * dx - 1.0, np.arange(m) * dx)
    assert np.all(plus[offsets < 0] == 0.0)
    assert np.all(minus[offsets > 0] == 0.0)
    # both sides keep the zero offset; they tile the full kernel
    assert np.allclose(plus + minus - full, np.where(offsets == 0.0, full, 0.0))


def test_sample_grid_2d_shape_and_center():
    s = KernelSpec(radius=0.2)
    values = sample_kernel_grid(s, GEOM2, 32)
    assert values.shape == (32, 32)
    assert values[0, 0] == 1.0  # zero offset is inside
    with pytest.raises(ValueError):
        sample_kernel_grid(KernelSpec(radius=0.2, cos_alpha=0.0), GEOM2, 32, side=1)
