"""Periodic domain geometry for 1D and 2D tori."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TorusGeometry:
    """Flat torus [0, L)^d with the same side length on every axis."""

    dimension: int
    side: float = 1.0

    def __post_init__(self) -> None:
        if self.dimension not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        if not self.side > 0.0:
            raise ValueError("side length must be positive")

    @property
    def volume(self) -> float:
        return self.side**self.dimension


def wrap_positions(x: np.ndarray, geom: TorusGeometry) -> np.ndarray:
    """Map coordinates into [0, L) componentwise."""
    r = np.mod(x, geom.side)
    # np.mod can round up to exactly L for tiny negative inputs
    r[r == geom.side] = 0.0
    return r


def periodic_displacement(x: np.ndarray, y: np.ndarray, geom: TorusGeometry) -> np.ndarray:
    """Minimal-image displacement delta with (y + delta) = x mod L.

    Each component lies in [-L/2, L/2); the half-period ties break toward
    the negative representative so the interval is half-open.
    """
    l = geom.side
    delta = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return delta - l * np.floor(delta / l + 0.5)
