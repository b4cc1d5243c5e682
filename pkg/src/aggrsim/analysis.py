"""Structure detection on periodic density fields.

Helpers for counting aggregates and timing their formation:

* 1D profiles: periodic above-mean region counting, plateau-aware local
  maxima with circular prominence, peak centering.
* 2D fields: periodic connected-component counting and detection of
  ring-shaped level sets (a component of the above-threshold set that
  encloses a hole).
* time series: first crossing of a threshold.

Prominence matters because a numerically flat profile still has strict
local maxima at roundoff scale; a prominence floor separates "profile
with an aggregate" from "constant profile plus noise".
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import ConfigError


def count_above_mean_regions(values: np.ndarray) -> int:
    """Number of periodic connected regions where a 1D profile exceeds
    its mean.  A constant profile has none."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size < 2:
        raise ConfigError("need a 1D profile with at least two points")
    mask = values > values.mean()
    if mask.all() or not mask.any():
        return 0
    return int(np.count_nonzero(mask != np.roll(mask, 1))) // 2


def density_contrast(values: np.ndarray) -> float:
    """max/mean of a nonnegative profile (1 for a constant profile)."""
    values = np.asarray(values, dtype=np.float64)
    mean = float(values.mean())
    if mean <= 0.0:
        raise ConfigError("density contrast needs a positive-mean profile")
    return float(values.max()) / mean


def first_crossing(
    times: np.ndarray, series: np.ndarray, threshold: float
) -> float | None:
    """Earliest time at which the series reaches the threshold, or None."""
    times = np.asarray(times, dtype=np.float64)
    series = np.asarray(series, dtype=np.float64)
    if times.shape != series.shape:
        raise ConfigError("times and series must have matching shapes")
    hits = np.nonzero(series >= threshold)[0]
    if hits.size == 0:
        return None
    return float(times[hits[0]])


def _run_lengths(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Starts and lengths of maximal runs of equal values around the
    circle, beginning the tiling at a value-change boundary."""
    m = values.size
    change = values != np.roll(values, 1)
    starts = np.nonzero(change)[0]
    lengths = np.diff(np.append(starts, starts[0] + m))
    return starts, lengths


def local_maxima(values: np.ndarray, min_prominence: float = 0.0) -> np.ndarray:
    """Indices of periodic local maxima of a 1D profile, one per plateau,
    keeping only peaks whose circular prominence reaches min_prominence.

    Prominence of a peak is its height minus the higher of the two
    valley floors separating it from strictly higher ground (for the
    global maximum: height minus the global minimum).
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size < 2:
        raise ConfigError("need a 1D profile with at least two points")
    m = values.size
    if np.all(values == values[0]):
        return np.empty(0, dtype=np.int64)
    starts, lengths = _run_lengths(values)
    heights = values[starts]
    peaks = []
    n_runs = starts.size
    for k in range(n_runs):
        h = heights[k]
        if h > heights[(k - 1) % n_runs] and h > heights[(k + 1) % n_runs]:
            peaks.append(int((starts[k] + lengths[k] // 2) % m))
    kept = []
    for idx in peaks:
        h = values[idx]
        side_floors = []
        for step in (1, -1):
            lowest = h
            j = idx
            for _ in range(m):
                j = (j + step) % m
                if values[j] > h:
                    break
                lowest = min(lowest, values[j])
            side_floors.append(lowest)
        prominence = h - max(side_floors)
        if prominence >= min_prominence and prominence > 0.0:
            kept.append(idx)
    return np.array(sorted(kept), dtype=np.int64)


def center_on_peak(values: np.ndarray) -> np.ndarray:
    """Circularly shift a 1D profile so its maximum sits at the middle."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size < 2:
        raise ConfigError("need a 1D profile with at least two points")
    return np.roll(values, values.size // 2 - int(np.argmax(values)))


def _merge_wrapped_labels(labels: np.ndarray) -> int:
    """Count distinct components after identifying labels that touch
    across the periodic seams."""
    ids = np.unique(labels)
    ids = ids[ids != 0]
    parent = {int(i): int(i) for i in ids}

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    for first, last in ((labels[0, :], labels[-1, :]), (labels[:, 0], labels[:, -1])):
        both = (first != 0) & (last != 0)
        for a, b in zip(first[both], last[both]):
            union(int(a), int(b))
    return len({find(int(i)) for i in ids})


def count_blobs(values: np.ndarray, threshold: float | None = None) -> int:
    """Number of periodic connected components of {values > threshold}
    in a 2D field (4-connectivity; threshold defaults to the mean)."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ConfigError("need a 2D field")
    if threshold is None:
        threshold = float(values.mean())
    mask = values > threshold
    if mask.all() or not mask.any():
        return 0
    labels, _ = ndimage.label(mask)
    return _merge_wrapped_labels(labels)


def has_ring(values: np.ndarray, threshold: float | None = None) -> bool:
    """Whether any above-threshold component of a 2D periodic field
    encloses a hole (a ring-shaped level set).

    Components are recentred away from the seams before hole-filling;
    a component leaving no empty row or column to recentre through
    (i.e. wrapping the torus in both directions) is not counted.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ConfigError("need a 2D field")
    if threshold is None:
        threshold = float(values.mean())
    mask = values > threshold
    if mask.all() or not mask.any():
        return False
    # recentre the whole mask through empty rows/columns so structures
    # straddling a seam become contiguous before labeling
    empty_rows = np.nonzero(~mask.any(axis=1))[0]
    empty_cols = np.nonzero(~mask.any(axis=0))[0]
    if empty_rows.size:
        mask = np.roll(mask, -int(empty_rows[0]) - 1, axis=0)
    if empty_cols.size:
        mask = np.roll(mask, -int(empty_cols[0]) - 1, axis=1)
    labels, count = ndimage.label(mask)
    for lab in range(1, count + 1):
        comp = labels == lab
        empty_rows = np.nonzero(~comp.any(axis=1))[0]
        empty_cols = np.nonzero(~comp.any(axis=0))[0]
        if empty_rows.size == 0 and empty_cols.size == 0:
            continue
        shifted = comp
        if empty_rows.size:
            shifted = np.roll(shifted, -int(empty_rows[0]) - 1, axis=0)
        if empty_cols.size:
            shifted = np.roll(shifted, -int(empty_cols[0]) - 1, axis=1)
        if ndimage.binary_fill_holes(shifted).sum() > shifted.sum():
            return True
    return False
