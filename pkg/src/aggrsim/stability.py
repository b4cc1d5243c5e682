"""Linear stability of constant states of the nonlocal diffusion model.

Linearizing d(rho)/dt = 1/2 Laplacian(G(W*rho)^2 rho) around rho0 and
Fourier-transforming gives the per-mode growth rate

    lambda(xi) = -|xi|^2 * (G(theta0)/2) * (G(theta0) + 2 G'(theta0) rho0 ReW(xi))

with theta0 = rho0 * What(0) the perceived level of the constant state.
Mode n (xi_n = 2 pi n / L) grows exactly when the bracketed factor is
negative, i.e. when Re What(xi_n) exceeds the threshold
-G(theta0) / (2 G'(theta0) rho0); stability labels are derived from the
sign of the same factor used in the rate, so label and sign(lambda)
can never disagree.

The companion local criterion (kernel collapsed to a point) is the
sign of D_loc = (G(rho)^2 rho)' = 2 G(rho0) G'(rho0) rho0 + G(rho0)^2:
a negative value means the constant state feeds a backward heat
equation and the local problem is ill-posed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError
from .geometry import TorusGeometry
from .kernels import KernelSpec, kernel_fourier
from .responses import ResponseFunctions


@dataclass(frozen=True)
class ModeStability:
    """Stability data for one Fourier mode of the torus."""

    n: int
    xi: float
    re_w: float  # Re What(xi_n)
    growth_rate: float  # lambda(xi_n)
    unstable: bool
    tie: bool  # factor exactly zero: boundary case, counted stable-neutral


@dataclass(frozen=True)
class StabilityReport:
    rho0: float
    theta0: float
    g_value: float
    g_slope: float
    threshold: float  # -G/(2 G' rho0); +inf when G' = 0
    degenerate: bool  # G(theta0) = 0: all rates vanish identically
    modes: tuple[ModeStability, ...]
    wellposed: bool
    local_diffusivity: float

    @property
    def unstable_modes(self) -> tuple[int, ...]:
        return tuple(m.n for m in self.modes if m.unstable)

    @property
    def fastest_mode(self) -> ModeStability | None:
        unstable = [m for m in self.modes if m.unstable]
        if not unstable:
            return None
        return max(unstable, key=lambda m: m.growth_rate)

    @property
    def fastest_wavelength(self) -> float | None:
        fastest = self.fastest_mode
        if fastest is None or fastest.n == 0:
            return None
        return 2.0 * math.pi / fastest.xi

    @property
    def largest_unstable_mode(self) -> int | None:
        unstable = self.unstable_modes
        return max(unstable) if unstable else None


def _state_values(
    rho0: float, spec: KernelSpec, responses: ResponseFunctions, geom: TorusGeometry
) -> tuple[float, float, float]:
    """(theta0, G(theta0), G'(theta0)) for the constant state rho0."""
    if rho0 <= 0.0:
        raise ConfigError("the constant state must have positive density")
    w0 = float(kernel_fourier(spec, geom, 0)[0])
    theta0 = rho0 * w0
    g_value = float(responses.g(theta0))
    g_slope = float(responses.g.derivative(theta0))
    return theta0, g_value, g_slope


def _mode_factor(g_value: float, g_slope: float, rho0: float, re_w: float) -> float:
    """The bracketed dispersion factor G + 2 G' rho0 ReW; its sign decides
    stability and it multiplies -xi^2 G/2 to give the rate."""
    return g_value + 2.0 * g_slope * rho0 * re_w


def growth_rate(
    n: int,
    rho0: float,
    spec: KernelSpec,
    responses: ResponseFunctions,
    geom: TorusGeometry,
) -> float:
    """Growth rate lambda(xi_n) of mode n around the constant state."""
    if n < 0:
        raise ConfigError("mode index must be nonnegative")
    theta0, g_value, g_slope = _state_values(rho0, spec, responses, geom)
    if g_value == 0.0:
        return 0.0
    re_w = float(kernel_fourier(spec, geom, n)[n])
    xi = 2.0 * math.pi * n / geom.side
    return -(xi * xi) * 0.5 * g_value * _mode_factor(g_value, g_slope, rho0, re_w)


def classify_modes(
    rho0: float,
    spec: KernelSpec,
    responses: ResponseFunctions,
    geom: TorusGeometry,
    max_mode: int,
) -> StabilityReport:
    """Full per-mode stability report for modes 0..max_mode."""
    if max_mode < 1:
        raise ConfigError("max_mode must be at least 1")
    theta0, g_value, g_slope = _state_values(rho0, spec, responses, geom)
    degenerate = g_value == 0.0
    if g_slope == 0.0:
        threshold = math.inf
    else:
        threshold = -g_value / (2.0 * g_slope * rho0)
    modes = []
    for n in range(max_mode + 1):
        # evaluated per mode, exactly as growth_rate() does, so the
        # reported rates and labels are bitwise identical to its output
        re_w = float(kernel_fourier(spec, geom, n)[n])
        xi = 2.0 * math.pi * n / geom.side
        if degenerate:
            rate, unstable, tie = 0.0, False, False
        else:
            factor = _mode_factor(g_value, g_slope, rho0, re_w)
            rate = -(xi * xi) * 0.5 * g_value * factor
            unstable = n > 0 and factor < 0.0
            tie = n > 0 and factor == 0.0
        modes.append(
            ModeStability(
                n=n, xi=xi, re_w=re_w, growth_rate=rate, unstable=unstable, tie=tie
            )
        )
    wellposed, d_loc = local_wellposedness(rho0, responses)
    return StabilityReport(
        rho0=rho0,
        theta0=theta0,
        g_value=g_value,
        g_slope=g_slope,
        threshold=threshold,
        degenerate=degenerate,
        modes=tuple(modes),
        wellposed=wellposed,
        local_diffusivity=d_loc,
    )


def local_wellposedness(
    rho0: float, responses: ResponseFunctions
) -> tuple[bool, float]:
    """Sign test of the local (point-kernel) diffusivity
    D_loc = 2 G(rho0) G'(rho0) rho0 + G(rho0)^2."""
    if rho0 <= 0.0:
        raise ConfigError("the constant state must have positive density")
    g_value = float(responses.g(rho0))
    g_slope = float(responses.g.derivative(rho0))
    d_loc = 2.0 * g_value * g_slope * rho0 + g_value * g_value
    return d_loc > 0.0, d_loc


def wellposedness_boundary(
    responses: ResponseFunctions,
    lo: float,
    hi: float,
    tol: float = 1e-10,
) -> float:
    """Bisect for the density where the local diffusivity changes sign.

    The bracket [lo, hi] must straddle the flip: D_loc(lo) and
    D_loc(hi) must have opposite signs.
    """
    if not (lo > 0.0 and hi > lo):
        raise ConfigError("need 0 < lo < hi for the bisection bracket")
    f_lo = local_wellposedness(lo, responses)[1]
    f_hi = local_wellposedness(hi, responses)[1]
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo > 0.0) == (f_hi > 0.0):
        raise ConfigError("bisection bracket does not straddle a sign change")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = local_wellposedness(mid, responses)[1]
        if f_mid == 0.0:
            return mid
        if (f_mid > 0.0) == (f_lo > 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
