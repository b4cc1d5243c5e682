"""Deterministic counter-based random streams.

Every draw is a pure function of (seed, stream tag, step, element index):
the generator never carries hidden state, so values do not depend on
evaluation order, identical seeds give bit-identical runs, and each
particle owns its own substream.  The word function is the splitmix64
output mix applied to an affine counter; normals come from one Box-Muller
cosine branch per element.  This choice is fixed: changing it would change
every seeded trajectory.
"""

from __future__ import annotations

import numpy as np

# stream tags; distinct ones decorrelate draws made for different purposes
TAG_POSITION = 0x11
TAG_VELOCITY = 0x22
TAG_MOVE = 0x33
TAG_FIELD = 0x44

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_U53 = np.float64(1.0 / 9007199254740992.0)  # 2**-53


def _mix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer on uint64 arrays (wraparound arithmetic)."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _stream_base(seed: int, tag: int, step: int) -> np.uint64:
    """Fold (seed, tag, step) into one well-mixed 64-bit stream offset."""
    with np.errstate(over="ignore"):
        base = _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + _GAMMA)
        base = _mix64(base ^ np.uint64(tag))
        return _mix64(base + np.uint64(step) * _GAMMA)


def _words(base: np.uint64, index: np.ndarray) -> np.ndarray:
    """Counter words: splitmix64 stream sliced at `base`."""
    with np.errstate(over="ignore"):
        return _mix64(base + (index.astype(np.uint64) + np.uint64(1)) * _GAMMA)


def uniforms(seed: int, tag: int, step: int, n: int) -> np.ndarray:
    """n doubles uniform on [0, 1), one per counter index."""
    base = _stream_base(seed, tag, step)
    w = _words(base, np.arange(n, dtype=np.uint64))
    return (w >> np.uint64(11)).astype(np.float64) * _U53


def normals(seed: int, tag: int, step: int, shape: tuple[int, ...]) -> np.ndarray:
    """Standard normal draws with the given shape.

    Element k uses counter words 2k and 2k+1 of the (seed, tag, step)
    stream, so the draw for one particle/component never shifts when the
    array grows or the evaluation order changes.
    """
    n = int(np.prod(shape)) if shape else 1
    base = _stream_base(seed, tag, step)
    idx = np.arange(n, dtype=np.uint64)
    w1 = _words(base, idx * np.uint64(2))
    w2 = _words(base, idx * np.uint64(2) + np.uint64(1))
    # u1 in (0, 1] so the log is finite; u2 in [0, 1)
    u1 = ((w1 >> np.uint64(11)).astype(np.float64) + 1.0) * _U53
    u2 = (w2 >> np.uint64(11)).astype(np.float64) * _U53
    z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
    return z.reshape(shape)
