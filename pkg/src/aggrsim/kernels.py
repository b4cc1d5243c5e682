"""Sampling kernels: radial profiles, cones of perception, Fourier symbols.

A kernel W weighs how strongly a neighbor at displacement delta (and, for
directed kernels, at angle z relative to the observer's heading) counts
toward the perceived density.  Conventions fixed here and relied on by
every backend:

* membership in the support uses squared distances, ``|delta|^2 <= R^2``
  (a closed ball: distance exactly R is inside);
* the angular gate is ``delta . v >= cos_alpha * sqrt(|delta|^2 |v|^2)``,
  a closed interval in the cosine; a coincident pair (delta = 0) always
  passes the gate;
* ``cos_alpha = -1`` reduces the directed evaluation exactly to the
  undirected one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import j0 as _bessel_j0

from .geometry import TorusGeometry, periodic_displacement

PROFILES = ("indicator", "bump")
NORMALIZATIONS = ("raw", "unit")

# backend code numbers shared with the compiled extension
PROFILE_ID = {"indicator": 0, "bump": 1}


@dataclass(frozen=True)
class KernelSpec:
    """Radial profile + perception cone + normalization flag.

    profile
        "indicator": w(s) = 1 on [0, R]; the hard counting kernel.
        "bump": w(s) = (1 - (s/R)^2)^2 on [0, R]; once continuously
        differentiable, for analysis-grade smoothness.
    radius
        Sampling radius R > 0.
    cos_alpha
        Cosine threshold of the perception cone.  The kernel is
        evaluated at delta = observer position - neighbor position
        (minimal image), and a neighbor counts when the cosine of the
        angle between delta and the observer's heading v is >=
        cos_alpha; with cos_alpha = 0 a mover counts the mass in the
        half-space it is leaving behind.  -1 means full perception
        (undirected).
    normalization
        "raw" uses the profile as is; "unit" rescales so the kernel has
        unit integral (continuous integral for pointwise and Fourier
        evaluation, discrete quadrature when sampled on a grid, so that
        the sampled kernel sums to one exactly).
    """

    radius: float
    profile: str = "indicator"
    cos_alpha: float = -1.0
    normalization: str = "raw"

    def __post_init__(self) -> None:
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if not self.radius > 0.0:
            raise ValueError("kernel radius must be positive")
        if not -1.0 <= self.cos_alpha <= 1.0:
            raise ValueError("cos_alpha must lie in [-1, 1]")

    @property
    def directed(self) -> bool:
        return self.cos_alpha > -1.0

    def profile_values(self, dist_sq: np.ndarray) -> np.ndarray:
        """Raw profile w(s) evaluated from squared distances."""
        dist_sq = np.asarray(dist_sq, dtype=np.float64)
        r_sq = self.radius * self.radius
        inside = dist_sq <= r_sq
        if self.profile == "indicator":
            return inside.astype(np.float64)
        u = dist_sq / r_sq
        return np.where(inside, (1.0 - u) ** 2, 0.0)

    def angular_fraction(self, dimension: int) -> float:
        """Fraction of directions the cone admits (1 when undirected)."""
        if not self.directed:
            return 1.0
        if dimension == 1:
            return 0.5
        return float(np.arccos(self.cos_alpha) / np.pi)

    def integral(self, dimension: int) -> float:
        """Continuous integral of the raw profile over its support."""
        r = self.radius
        if dimension == 1:
            full = 2.0 * r if self.profile == "indicator" else 16.0 * r / 15.0
        elif dimension == 2:
            full = np.pi * r * r if self.profile == "indicator" else np.pi * r * r / 3.0
        else:
            raise ValueError("dimension must be 1 or 2")
        return full * self.angular_fraction(dimension)

    def scale(self, dimension: int) -> float:
        """Multiplier applied to raw profile values at evaluation time."""
        if self.normalization == "raw":
            return 1.0
        return 1.0 / self.integral(dimension)


def eval_kernel(
    delta: np.ndarray, spec: KernelSpec, v: np.ndarray | None = None
) -> float | np.ndarray:
    """Evaluate W(delta) or the directed W(delta, v).

    delta is a minimal-image displacement of shape (d,) or (n, d) in the
    convention delta = observer position - neighbor position; v, when
    the kernel is directed, is the observer's velocity with matching
    shape.  A directed kernel with a zero velocity has no heading and is
    an error.
    """
    delta = np.atleast_2d(np.asarray(delta, dtype=np.float64))
    d = delta.shape[1]
    dist_sq = np.einsum("ij,ij->i", delta, delta)
    w = spec.profile_values(dist_sq)
    if spec.directed:
        if v is None:
            raise ValueError("directed kernel needs the observer velocity")
        v = np.atleast_2d(np.asarray(v, dtype=np.float64))
        v = np.broadcast_to(v, delta.shape)
        v_sq = np.einsum("ij,ij->i", v, v)
        if np.any(v_sq == 0.0):
            raise ValueError("undefined heading: zero velocity with a directed kernel")
        dot = np.einsum("ij,ij->i", delta, v)
        # coincident points (dist_sq == 0) satisfy the gate with equality
        gate = dot >= spec.cos_alpha * np.sqrt(dist_sq * v_sq)
        w = np.where(gate, w, 0.0)
    out = w * spec.scale(d)
    return out if out.size > 1 else float(out[0])


def _panel_quadrature(f, a: float, b: float, atol: float = 1e-10) -> np.ndarray:
    """Integrate a vector-valued smooth integrand by panel-doubled Gauss.

    Starts with one 16-node Gauss-Legendre panel on [a, b] and doubles the
    panel count until another halving of the step changes no component by
    more than atol.  The integrand has no interior kinks by construction
    (the support edge is always a panel boundary), so this converges fast.
    """
    nodes, weights = np.polynomial.legendre.leggauss(16)
    prev = None
    panels = 1
    while panels <= 4096:
        edges = np.linspace(a, b, panels + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1] - edges[0])
        x = (mid[:, None] + half * nodes[None, :]).ravel()
        w = np.broadcast_to(half * weights, (panels, 16)).ravel()
        cur = f(x) @ w
        if prev is not None and np.max(np.abs(cur - prev)) <= atol:
            return cur
        prev = cur
        panels *= 2
    return prev


def kernel_fourier(spec: KernelSpec, geom: TorusGeometry, max_mode: int) -> np.ndarray:
    """Real parts of the torus Fourier coefficients for modes 0..max_mode.

    Modes are xi_n = 2 pi n / L.  Because the support radius is below half
    the period, the torus coefficient equals the whole-space transform:
    in 1D ``2 int_0^R w(s) cos(xi s) ds`` (one-sided for a directed
    kernel, whose real part does not depend on the heading sign), in 2D
    ``2 pi int_0^R w(s) J0(xi s) s ds``.  Quadrature panels are refined
    until a further halving moves no coefficient by more than 1e-10.
    """
    if max_mode < 0:
        raise ValueError("max_mode must be >= 0")
    if 2.0 * spec.radius >= geom.side:
        raise ValueError("kernel radius must be below half the torus side")
    xi = 2.0 * np.pi * np.arange(max_mode + 1) / geom.side
    if geom.dimension == 1:
        front = 1.0 if spec.directed else 2.0

        def integrand(s: np.ndarray) -> np.ndarray:
            return spec.profile_values(s * s)[None, :] * np.cos(xi[:, None] * s[None, :])

    else:
        if spec.directed:
            raise ValueError("kernel_fourier needs an undirected kernel in 2D")
        front = 2.0 * np.pi

        def integrand(s: np.ndarray) -> np.ndarray:
            w = spec.profile_values(s * s) * s
            return w[None, :] * _bessel_j0(xi[:, None] * s[None, :])

    coeff = front * _panel_quadrature(integrand, 0.0, spec.radius)
    return coeff * spec.scale(geom.dimension)


def sample_kernel_grid(
    spec: KernelSpec, geom: TorusGeometry, points_per_axis: int, side: int = 0
) -> np.ndarray:
    """Kernel values at grid offsets, for discrete circular convolution.

    Returns shape (M,) in 1D or (M, M) in 2D, entry k holding the kernel
    at the minimal-image displacement of ``k * dx``.  ``side=+1`` (1D
    only) keeps offsets pointing in the positive direction plus the zero
    offset, ``side=-1`` the mirror; this realizes one-sided perception on
    a grid.  Unit normalization divides by the discrete quadrature so the
    sampled kernel integrates to one exactly on this grid.
    """
    m = points_per_axis
    if m < 2:
        raise ValueError("need at least two grid points per axis")
    if 2.0 * spec.radius >= geom.side:
        raise ValueError("kernel radius must be below half the torus side")
    dx = geom.side / m
    offsets = periodic_displacement(np.arange(m) * dx, 0.0, geom)
    if geom.dimension == 1:
        values = spec.profile_values(offsets * offsets)
        if side > 0:
            values = np.where(offsets >= 0.0, values, 0.0)
        elif side < 0:
            values = np.where(offsets <= 0.0, values, 0.0)
    else:
        if side != 0:
            raise ValueError("one-sided sampling is defined in 1D only")
        dist_sq = offsets[:, None] ** 2 + offsets[None, :] ** 2
        values = spec.profile_values(dist_sq)
    if spec.normalization == "unit":
        quad = values.sum() * dx**geom.dimension
        if quad == 0.0:
            raise ValueError("kernel support falls between grid points")
        values = values / quad
    return values
