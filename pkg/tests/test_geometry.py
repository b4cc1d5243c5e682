"""Torus geometry: wrapping and minimal-image displacements."""

import numpy as np
import pytest

from aggrsim.geometry import TorusGeometry, periodic_displacement, wrap_positions

SEEDS = range(5)


def _random_points(seed: int, n: int, dim: int, lo: float = -30.0, hi: float = 30.0):
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, size=(n, dim))


@pytest.mark.parametrize("seed", SEEDS)
@pytest.mark.parametrize("dim", [1, 2])
def test_wrap_lands_in_box(seed, dim):
    geom = TorusGeometry(dimension=dim, side=2.5)
    x = _random_points(seed, 200, dim)
    w = wrap_positions(x, geom)
    assert np.all(w >= 0.0) and np.all(w < geom.side)


@pytest.mark.parametrize("seed", SEEDS)
def test_wrap_idempotent(seed):
    geom = TorusGeometry(dimension=2, side=1.0)
    x = _random_points(seed, 100, 2)
    w = wrap_positions(x, geom)
    assert np.array_equal(wrap_positions(w, geom), w)


def test_wrap_preserves_torus_class():
    geom = TorusGeometry(dimension=1, side=1.0)
    assert wrap_positions(np.array([1.25]), geom)[0] == pytest.approx(0.25)
    assert wrap_positions(np.array([-0.25]), geom)[0] == pytest.approx(0.75)


@pytest.mark.parametrize("seed", SEEDS)
@pytest.mark.parametrize("dim", [1, 2])
def test_displacement_antisymmetric(seed, dim):
    geom = TorusGeometry(dimension=dim, side=3.0)
    x = wrap_positions(_random_points(seed, 50, dim), geom)
    y = wrap_positions(_random_points(seed + 100, 50, dim), geom)
    d_xy = periodic_displacement(x, y, geom)
    d_yx = periodic_displacement(y, x, geom)
    # antisymmetric except at the cut |d| == side/2 where both signs
    # represent the same displacement
    at_cut = np.isclose(np.abs(d_xy), geom.side / 2)
    assert np.allclose(np.where(at_cut, 0.0, d_xy + d_yx), 0.0, atol=1e-12)


@pytest.mark.parametrize("seed", SEEDS)
@pytest.mark.parametrize("dim", [1, 2])
def test_displacement_minimal_image(seed, dim):
    geom = TorusGeometry(dimension=dim, side=2.0)
    x = wrap_positions(_random_points(seed, 50, dim), geom)
    y = wrap_positions(_random_points(seed + 7, 50, dim), geom)
    d = periodic_displacement(x, y, geom)
    assert np.all(np.abs(d) <= geom.side / 2 + 1e-12)
    # congruent to the raw difference modulo the side length
    assert np.allclose((x - y - d) % geom.side, 0.0, atol=1e-9) or np.allclose(
        ((x - y - d) % geom.side) - geom.side, 0.0, atol=1e-9
    ) or np.allclose(np.minimum((x - y - d) % geom.side, geom.side - ((x - y - d) % geom.side)), 0.0, atol=1e-9)


def test_displacement_known_values():
    geom = TorusGeometry(dimension=1, side=1.0)
    assert periodic_displacement(np.array(0.9), np.array(0.1), geom) == pytest.approx(-0.2)
    assert periodic_displacement(np.array(0.1), np.array(0.9), geom) == pytest.approx(0.2)
    # at the cut both signs represent the same displacement
    assert abs(periodic_displacement(np.array(0.6), np.array(0.1), geom)) == pytest.approx(0.5, abs=1e-12)


def test_geometry_validation():
    with pytest.raises(Exception):
        TorusGeometry(dimension=3, side=1.0)
    with pytest.raises(Exception):
        TorusGeometry(dimension=1, side=0.0)


def test_volume():
    assert TorusGeometry(dimension=2, side=2.0).volume == pytest.approx(4.0)
    assert TorusGeometry(dimension=1, side=5.0).volume == pytest.approx(5.0)
