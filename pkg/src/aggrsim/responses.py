"""Response functions G (noise amplitude) and H (friction).

G maps perceived density to the amplitude of the random motion and must
be nonnegative and nonincreasing; H maps it to a friction coefficient and
must be nonnegative and nondecreasing.  Monotonicity of custom callables
is checked by sampling, the only option for black-box functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class Response:
    """One scalar response s -> value, with derivative when available."""

    kind: str
    fn: Callable[[np.ndarray], np.ndarray]
    dfn: Callable[[np.ndarray], np.ndarray] | None = None
    param: float = field(default=float("nan"))

    def __call__(self, s):
        return self.fn(np.asarray(s, dtype=np.float64))

    def derivative(self, s):
        """Analytic derivative, or a central difference fallback.

        The fallback uses step 1e-6 * max(1, s) and flags disagreement
        with the half-step estimate beyond what quadratic convergence
        allows, which catches kinks and noisy callables.
        """
        if self.dfn is not None:
            return self.dfn(np.asarray(s, dtype=np.float64))
        s = np.asarray(s, dtype=np.float64)
        h = 1e-6 * np.maximum(1.0, np.abs(s))
        d1 = (self(s + h) - self(s - h)) / (2.0 * h)
        d2 = (self(s + 0.5 * h) - self(s - 0.5 * h)) / h
        rich = (4.0 * d2 - d1) / 3.0
        scale = np.maximum(1e-12, np.maximum(np.abs(d1), np.abs(d2)))
        if np.any(np.abs(d1 - d2) > 1e-3 * scale + 1e-9):
            raise ValueError("finite-difference derivative did not converge")
        return rich

    @staticmethod
    def constant(c: float) -> "Response":
        if c < 0.0:
            raise ValueError("constant response must be nonnegative")
        return Response(
            "constant",
            lambda s: np.full_like(np.asarray(s, dtype=np.float64), c),
            lambda s: np.zeros_like(np.asarray(s, dtype=np.float64)),
            param=c,
        )

    @staticmethod
    def exp_decay(a: float) -> "Response":
        """G(s) = exp(-s / a); the derivative is -G/a exactly."""
        if not a > 0.0:
            raise ValueError("exp_decay scale must be positive")

        def fn(s):
            return np.exp(-np.asarray(s, dtype=np.float64) / a)

        return Response("exp_decay", fn, lambda s: -fn(s) / a, param=a)

    @staticmethod
    def hard_cutoff(s0: float) -> "Response":
        """1 below the cutoff, 0 at and above it (closed on the zero side)."""
        if not s0 > 0.0:
            raise ValueError("hard_cutoff threshold must be positive")

        def fn(s):
            return np.where(np.asarray(s, dtype=np.float64) < s0, 1.0, 0.0)

        return Response(
            "hard_cutoff",
            fn,
            lambda s: np.zeros_like(np.asarray(s, dtype=np.float64)),
            param=s0,
        )

    @staticmethod
    def custom(fn, dfn=None, kind: str = "custom") -> "Response":
        return Response(kind, fn, dfn)


def _check_monotone(r: Response, decreasing: bool, s_max: float) -> None:
    s = np.linspace(0.0, s_max, 257)
    v = r(s)
    if np.any(v < 0.0):
        raise ValueError("response must be nonnegative")
    dv = np.diff(v)
    if decreasing and np.any(dv > 1e-12):
        raise ValueError("G must be nonincreasing (sampled check failed)")
    if not decreasing and np.any(dv < -1e-12):
        raise ValueError("H must be nondecreasing (sampled check failed)")


@dataclass(frozen=True)
class ResponseFunctions:
    """The (G, H) pair used by a model; H may be absent for order one."""

    g: Response
    h: Response | None = None

    def __post_init__(self) -> None:
        _check_monotone(self.g, decreasing=True, s_max=10.0)
        if self.h is not None:
            _check_monotone(self.h, decreasing=False, s_max=10.0)

    def require_h(self) -> Response:
        if self.h is None:
            raise ConfigError("this model needs a friction response H")
        return self.h
