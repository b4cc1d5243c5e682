"""Neighbor search: perceived density and cluster counting.

Two interchangeable backends provide the hot kernels: a compiled
extension (aggrsim._core, built from Cython) and a pure numpy fallback
(aggrsim._core_py).  The compiled one is used when importable unless the
environment variable AGGRSIM_DISABLE_EXT is set to a non-empty value
other than "0".  Both follow identical arithmetic conventions, so
indicator-kernel results agree bit for bit.

The cell-list path cuts the pairwise cost from O(N^2) to O(N) for
short-ranged kernels.  Cells are a uniform grid of floor(side/radius)
bins per axis; every true neighbor of a particle lies in the 3^d block
around its cell because the cell width is at least the kernel radius.
Blocks are deduplicated modulo the grid, which keeps the sums correct
even for 1- or 2-cell grids.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .geometry import TorusGeometry
from .kernels import PROFILE_ID, KernelSpec

if os.environ.get("AGGRSIM_DISABLE_EXT", "") not in ("", "0"):
    from . import _core_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _core_py as _impl

        BACKEND = "python"


@dataclass(frozen=True)
class CellIndex:
    """Particles bucketed into a uniform periodic grid of cells.

    order: particle indices sorted by cell id (ties in unspecified
    order; candidate queries sort their own output).
    start: offsets into order; cell c holds order[start[c]:start[c+1]].
    ncells: bins per axis; cell_width = side / ncells >= radius.
    """

    order: np.ndarray
    start: np.ndarray
    ncells: int
    cell_width: float
    radius: float
    geom: TorusGeometry

    def cell_coords(self, pos: np.ndarray) -> np.ndarray:
        coords = (pos / self.cell_width).astype(np.int64)
        return np.minimum(np.maximum(coords, 0), self.ncells - 1)

    def candidates_of(self, point: np.ndarray) -> np.ndarray:
        """Indices in the 3^d block around the point's cell (a superset
        of its true neighbors within the radius)."""
        cell = self.cell_coords(np.asarray(point, dtype=np.float64)[None, :])[0]
        axes = [
            np.unique((cell[c] + np.arange(-1, 2)) % self.ncells)
            for c in range(self.geom.dimension)
        ]
        if self.geom.dimension == 1:
            ids = axes[0]
        else:
            ids = (axes[0][:, None] * self.ncells + axes[1][None, :]).ravel()
        parts = [self.order[self.start[c] : self.start[c + 1]] for c in ids]
        return np.sort(np.concatenate(parts)) if parts else np.empty(0, np.int64)


def _cell_index_any(pos: np.ndarray, geom: TorusGeometry, radius: float) -> CellIndex:
    """Cell index without the degeneracy guard (any radius <= side works
    because blocks are deduplicated)."""
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    # cap the grid so memory stays O(N) even for tiny radii; a coarser
    # grid only widens cells, which keeps the superset property
    cap = (1 << 20) if geom.dimension == 1 else (1 << 10)
    ncells = min(max(1, int(geom.side / radius)), cap)
    cell_width = geom.side / ncells
    coords = (pos / cell_width).astype(np.int64)
    coords = np.minimum(np.maximum(coords, 0), ncells - 1)
    if geom.dimension == 1:
        cid = coords[:, 0]
    else:
        cid = coords[:, 0] * ncells + coords[:, 1]
    total = ncells**geom.dimension
    order = np.argsort(cid).astype(np.int64)
    counts = np.bincount(cid, minlength=total)
    start = np.zeros(total + 1, dtype=np.int64)
    np.cumsum(counts, out=start[1:])
    return CellIndex(
        order=order,
        start=start,
        ncells=ncells,
        cell_width=cell_width,
        radius=radius,
        geom=geom,
    )


def build_cell_list(pos: np.ndarray, geom: TorusGeometry, radius: float) -> CellIndex:
    """Bucket positions (assumed wrapped into [0, side)) into cells.

    Requires radius < side/2; beyond that nearly every particle pair
    interacts and the naive path is the right tool.
    """
    if not radius > 0.0:
        raise ConfigError("interaction radius must be positive")
    if radius >= geom.side / 2.0:
        raise ConfigError("cell list degenerate; use naive path")
    return _cell_index_any(pos, geom, radius)


def _prepare(pos, vel, spec: KernelSpec):
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    if spec.directed:
        if vel is None:
            raise ValueError("directed kernel requires velocities")
        vel = np.ascontiguousarray(vel, dtype=np.float64)
        v_sq = np.einsum("ij,ij->i", vel, vel)
        if np.any(v_sq == 0.0):
            raise ValueError("undefined heading: zero velocity with a directed kernel")
    else:
        vel = None
    return pos, vel


def perceived_density_all(
    pos: np.ndarray,
    spec: KernelSpec,
    geom: TorusGeometry,
    vel: np.ndarray | None = None,
    method: str = "auto",
) -> np.ndarray:
    """Perceived local density for every particle.

    Returns (1/N) * sum_{j != i} W(x_i - x_j [, v_i]) with W scaled per
    the kernel's normalization.  method: "auto" (cell list when the grid
    is at least 3 cells per axis and N >= 64), "cells", or "naive".
    """
    if method not in ("auto", "cells", "naive"):
        raise ConfigError(f"unknown neighbor method: {method!r}")
    pos, vel = _prepare(pos, vel, spec)
    n, dim = pos.shape
    if dim != geom.dimension:
        raise ConfigError("position dimension does not match the geometry")
    profile = PROFILE_ID[spec.profile]
    degenerate = spec.radius >= geom.side / 2.0
    if method == "auto":
        method = "naive" if (degenerate or n < 64) else "cells"
    if n == 0:
        return np.zeros(0)
    if method == "cells":
        index = build_cell_list(pos, geom, spec.radius)
        raw = _impl.perceived_sums_cells(
            pos,
            vel,
            geom.side,
            spec.radius,
            profile,
            spec.cos_alpha,
            index.order,
            index.start,
            index.ncells,
        )
    else:
        raw = _impl.perceived_sums_naive(
            pos, vel, geom.side, spec.radius, profile, spec.cos_alpha
        )
    return raw * (spec.scale(geom.dimension) / n)


def cluster_count(
    pos: np.ndarray,
    geom: TorusGeometry,
    radius: float,
) -> tuple[int, np.ndarray]:
    """Connected components of the periodic radius graph.

    Two particles are linked when their torus distance is <= radius.
    Returns (number of clusters, cluster sizes sorted descending).
    """
    if not 0.0 < radius <= geom.side:
        raise ConfigError("cluster radius must lie in (0, side]")
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    n = pos.shape[0]
    if n == 0:
        return 0, np.zeros(0, dtype=np.int64)
    index = _cell_index_any(pos, geom, radius)
    labels = _impl.cluster_labels(
        pos, geom.side, radius, index.order, index.start, index.ncells
    )
    _, sizes = np.unique(labels, return_counts=True)
    sizes = np.sort(sizes)[::-1].astype(np.int64)
    return int(sizes.size), sizes
