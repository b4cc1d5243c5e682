"""Mean-field density solver: convolution, linear system, conservation."""

import numpy as np
import pytest
import scipy.sparse.linalg as spla

from aggrsim.errors import ConfigError
from aggrsim.geometry import TorusGeometry
from aggrsim.kernels import KernelSpec, sample_kernel_grid
from aggrsim.meanfield import (
    DensityField,
    PdeSimConfig,
    apply_semi_implicit,
    assemble_semi_implicit,
    convolve_periodic,
    cosine_field,
    diffusivity,
    random_initial_field,
    run_pde,
    step_pde,
)
from aggrsim.responses import Response, ResponseFunctions

GEOM1 = TorusGeometry(dimension=1, side=1.0)
GEOM2 = TorusGeometry(dimension=2, side=1.0)


def _cfg(**kw):
    base = dict(
        kernel=KernelSpec(radius=0.1),
        responses=ResponseFunctions(g=Response.exp_decay(3.0)),
        dt=1e-4,
        n_steps=50,
        snapshot_stride=25,
    )
    base.update(kw)
    return PdeSimConfig(**base)


# ------------------------------------------------------------ convolution


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("geom,m", [(GEOM1, 128), (GEOM2, 32)])
def test_convolution_fft_equals_direct(seed, geom, m):
    fld = random_initial_field(m, seed, geom)
    spec = KernelSpec(radius=0.13, profile="bump")
    a = convolve_periodic(fld, spec, method="fft").values
    b = convolve_periodic(fld, spec, method="direct").values
    assert np.allclose(a, b, rtol=1e-10, atol=1e-12)


def test_convolution_of_delta_is_kernel():
    m = 100
    values = np.zeros(m)
    values[30] = 1.0 / (1.0 / m)  # unit-mass spike
    fld = DensityField(GEOM1, values, 0.0)
    spec = KernelSpec(radius=0.07)
    conv = convolve_periodic(fld, spec).values
    kernel_row = sample_kernel_grid(spec, GEOM1, m)
    assert np.allclose(conv, np.roll(kernel_row, 30), atol=1e-12)


def test_convolution_of_constant_field():
    m = 64
    fld = DensityField(GEOM1, np.full(m, 2.5), 0.0)
    spec_unit = KernelSpec(radius=0.1, normalization="unit")
    conv = convolve_periodic(fld, spec_unit).values
    assert np.allclose(conv, 2.5, atol=1e-12)  # unit kernel preserves constants
    spec_raw = KernelSpec(radius=0.1)
    kernel_mass = sample_kernel_grid(spec_raw, GEOM1, m).sum() / m
    conv_raw = convolve_periodic(fld, spec_raw).values
    assert np.allclose(conv_raw, 2.5 * kernel_mass, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_convolution_total_mass_identity(seed):
    # sum (W*rho) dx = (sum W dx)(sum rho dx): discrete Fubini
    m = 96
    fld = random_initial_field(m, seed, GEOM1)
    spec = KernelSpec(radius=0.11, profile="bump")
    conv = convolve_periodic(fld, spec).values
    kernel_mass = sample_kernel_grid(spec, GEOM1, m).sum() / m
    assert conv.sum() / m == pytest.approx(kernel_mass * fld.values.sum() / m, rel=1e-12)


def test_convolution_rejects_wide_kernel_and_directed():
    fld = random_initial_field(32, 0, GEOM1)
    with pytest.raises(ConfigError, match="R < L/2 required"):
        convolve_periodic(fld, KernelSpec(radius=0.5))
    with pytest.raises(ConfigError):
        convolve_periodic(fld, KernelSpec(radius=0.1, cos_alpha=0.0))


# ------------------------------------------------------------ linear system


@pytest.mark.parametrize("geom,m", [(GEOM1, 60), (GEOM2, 16)])
def test_system_columns_sum_to_one(geom, m):
    fld = random_initial_field(m, 3, geom)
    system, _ = assemble_semi_implicit(fld, _cfg())
    col_sums = np.asarray(system.sum(axis=0)).ravel()
    assert np.allclose(col_sums, 1.0, atol=1e-12)


@pytest.mark.parametrize("geom,m", [(GEOM1, 60), (GEOM2, 16)])
def test_system_is_m_matrix(geom, m):
    fld = random_initial_field(m, 4, geom)
    system, _ = assemble_semi_implicit(fld, _cfg(dt=1e-3))
    dense = system.toarray()
    off = dense - np.diag(np.diag(dense))
    assert np.all(off <= 1e-15)
    assert np.all(np.diag(dense) > 0)


@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("geom,m", [(GEOM1, 80), (GEOM2, 20)])
def test_step_matches_sparse_solve(seed, geom, m):
    fld = random_initial_field(m, seed, geom)
    cfg = _cfg(dt=5e-4)
    system, rhs = assemble_semi_implicit(fld, cfg)
    oracle = spla.spsolve(system.tocsc(), rhs).reshape(fld.values.shape)
    stepped = step_pde(fld, cfg)
    assert np.allclose(stepped.values, oracle, rtol=1e-9, atol=1e-12)


def test_apply_matches_assembled_matrix():
    fld = random_initial_field(24, 7, GEOM2)
    cfg = _cfg(dt=2e-3)
    a = diffusivity(fld, cfg)
    system, _ = assemble_semi_implicit(fld, cfg)
    x = np.random.default_rng(0).standard_normal(fld.values.shape)
    direct = apply_semi_implicit(x, a, cfg.dt, fld.dx).ravel()
    assert np.allclose(system @ x.ravel(), direct, atol=1e-12)


def test_backward_euler_symbol_on_cosine_mode():
    # constant G makes the step exactly diagonal in Fourier space with
    # per-mode factor 1 / (1 + dt * a * s_n), s_n the discrete symbol
    m, g0, dt, n = 128, 0.7, 2e-3, 3
    cfg = _cfg(responses=ResponseFunctions(g=Response.constant(g0)), dt=dt)
    fld = cosine_field(GEOM1, m, base=1.0, amplitude=0.125, mode=n)
    stepped = step_pde(fld, cfg)
    dx = 1.0 / m
    s_n = (2.0 - 2.0 * np.cos(2.0 * np.pi * n / m)) / (dx * dx)
    factor = 1.0 / (1.0 + dt * (0.5 * g0 * g0) * s_n)
    expected = 1.0 + 0.125 * factor * np.cos(2.0 * np.pi * n * np.arange(m) * dx)
    assert np.allclose(stepped.values, expected, atol=1e-11)


# ------------------------------------------------------------ invariants


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("geom,m", [(GEOM1, 100), (GEOM2, 24)])
def test_mass_conserved_and_positive(seed, geom, m):
    fld = random_initial_field(m, seed, geom)
    run = run_pde(fld, _cfg(n_steps=40, dt=2e-4, snapshot_stride=40))
    masses = run.masses
    assert np.all(np.abs(masses - masses[0]) <= 1e-12 * max(1.0, abs(masses[0])))
    for snap in run.snapshots:
        assert np.all(snap.values >= 0.0)
    assert run.min_value_seen >= -1e-13


def test_constant_field_is_steady_immediately():
    fld = DensityField(GEOM1, np.full(80, 1.0), 0.0)
    run = run_pde(fld, _cfg(n_steps=100))
    assert run.steady_time == pytest.approx(run.config.dt)
    assert run.steps_taken == 1
    assert np.allclose(run.final.values, 1.0, atol=1e-12)


def test_degenerate_diffusivity_is_identity():
    # G vanishes above its cutoff; a dense uniform field sits above it
    cfg = _cfg(
        responses=ResponseFunctions(g=Response.hard_cutoff(0.05)),
        kernel=KernelSpec(radius=0.1),  # raw: W*rho = 0.2*rho = 0.6 > 0.05
        n_steps=3,
    )
    fld = DensityField(GEOM1, np.full(50, 3.0), 0.0)
    info: dict = {}
    stepped = step_pde(fld, cfg, info=info)
    assert info["solver"] == "identity"
    assert np.array_equal(stepped.values, fld.values)
    assert stepped.time == pytest.approx(cfg.dt)


def test_snapshot_schedule_and_times():
    fld = random_initial_field(64, 1, GEOM1)
    run = run_pde(fld, _cfg(n_steps=10, snapshot_stride=4, steady_threshold=1e-300))
    assert len(run.snapshots) == 4  # steps 0, 4, 8, 10
    assert run.times[0] == 0.0
    assert run.times[-1] == pytest.approx(10 * run.config.dt)


def test_config_validation():
    with pytest.raises(ConfigError, match="dt must be positive"):
        _cfg(dt=0.0)
    with pytest.raises(ConfigError):
        _cfg(n_steps=-1)
    with pytest.raises(ConfigError):
        _cfg(tau=0.0)
