"""Pure numpy/python backend for the neighbor-search kernels.

Mirrors the compiled extension in aggrsim._core; both must use the exact
same arithmetic conventions (squared-distance membership, the same
minimal-image formula, the same cone gate expression) so that indicator
counts agree bit for bit across backends.
"""

from __future__ import annotations

import numpy as np

_CHUNK_ELEMENTS = 2_000_000


def _min_image(delta: np.ndarray, side: float) -> np.ndarray:
    return delta - side * np.floor(delta / side + 0.5)


def perceived_sums_naive(
    pos: np.ndarray,
    vel: np.ndarray | None,
    side: float,
    radius: float,
    profile: int,
    cos_alpha: float,
) -> np.ndarray:
    """Raw kernel sums over all ordered pairs (i, j != i), O(N^2)."""
    n = pos.shape[0]
    r_sq = radius * radius
    directed = cos_alpha > -1.0
    sums = np.zeros(n)
    if n < 2:
        return sums
    if directed:
        v_sq = np.einsum("ij,ij->i", vel, vel)
    rows = max(1, _CHUNK_ELEMENTS // n)
    for lo in range(0, n, rows):
        hi = min(n, lo + rows)
        delta = pos[lo:hi, None, :] - pos[None, :, :]
        delta = _min_image(delta, side)
        dist_sq = np.einsum("abj,abj->ab", delta, delta)
        inside = dist_sq <= r_sq
        inside[np.arange(hi - lo), np.arange(lo, hi)] = False
        if profile == 0:
            w = inside.astype(np.float64)
        else:
            t = 1.0 - dist_sq / r_sq
            w = np.where(inside, t * t, 0.0)
        if directed:
            dot = np.einsum("abj,aj->ab", delta, vel[lo:hi])
            gate = dot >= cos_alpha * np.sqrt(dist_sq * v_sq[lo:hi, None])
            w = np.where(gate, w, 0.0)
        sums[lo:hi] = w.sum(axis=1)
    return sums


def _block_members(
    cell: np.ndarray, ncells: int, order: np.ndarray, start: np.ndarray
) -> np.ndarray:
    """Particle indices in the 3^d block of cells around `cell`."""
    d = cell.shape[0]
    axes = []
    for c in range(d):
        vals = np.unique((cell[c] + np.arange(-1, 2)) % ncells)
        axes.append(vals)
    if d == 1:
        ids = axes[0]
    else:
        ids = (axes[0][:, None] * ncells + axes[1][None, :]).ravel()
    parts = [order[start[cid] : start[cid + 1]] for cid in ids]
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)


def perceived_sums_cells(
    pos: np.ndarray,
    vel: np.ndarray | None,
    side: float,
    radius: float,
    profile: int,
    cos_alpha: float,
    order: np.ndarray,
    start: np.ndarray,
    ncells: int,
) -> np.ndarray:
    """Raw kernel sums using a prebuilt cell index."""
    n, d = pos.shape
    r_sq = radius * radius
    directed = cos_alpha > -1.0
    cell_width = side / ncells
    coords = np.minimum((pos / cell_width).astype(np.int64), ncells - 1)
    sums = np.zeros(n)
    for i in range(n):
        cand = _block_members(coords[i], ncells, order, start)
        cand = cand[cand != i]
        if cand.size == 0:
            continue
        delta = _min_image(pos[i] - pos[cand], side)
        dist_sq = np.einsum("ij,ij->i", delta, delta)
        inside = dist_sq <= r_sq
        if profile == 0:
            w = inside.astype(np.float64)
        else:
            t = 1.0 - dist_sq / r_sq
            w = np.where(inside, t * t, 0.0)
        if directed:
            v = vel[i]
            v_sq = float(v @ v)
            dot = delta @ v
            gate = dot >= cos_alpha * np.sqrt(dist_sq * v_sq)
            w = np.where(gate, w, 0.0)
        sums[i] = w.sum()
    return sums


def cluster_labels(
    pos: np.ndarray,
    side: float,
    radius: float,
    order: np.ndarray,
    start: np.ndarray,
    ncells: int,
) -> np.ndarray:
    """Union-find root label per particle; an edge is distance <= radius."""
    n = pos.shape[0]
    r_sq = radius * radius
    cell_width = side / ncells
    coords = np.minimum((pos / cell_width).astype(np.int64), ncells - 1)
    parent = np.arange(n, dtype=np.int64)

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        cand = _block_members(coords[i], ncells, order, start)
        cand = cand[cand > i]
        if cand.size == 0:
            continue
        delta = _min_image(pos[i] - pos[cand], side)
        dist_sq = np.einsum("ij,ij->i", delta, delta)
        for j in cand[dist_sq <= r_sq]:
            ri, rj = find(i), find(int(j))
            if ri != rj:
                parent[rj] = ri
    return np.fromiter((find(i) for i in range(n)), dtype=np.int64, count=n)
