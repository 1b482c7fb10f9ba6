"""Phase-space points and deterministic box sampling.

The variable ordering used across the whole package is fixed here once:
``(x1, ..., xn, p1, ..., pn)``.  Flat vectors, jet coefficient arrays and
Jacobian rows/columns all follow it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError

__all__ = ["PhasePoint", "sample_box"]


@dataclass(frozen=True)
class PhasePoint:
    """A point (x, p) of the cotangent bundle with dimension ``n = len(x)``."""

    x: tuple[float, ...]
    p: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "p", tuple(float(v) for v in self.p))
        if len(self.x) != len(self.p):
            raise DimensionError(
                f"position has {len(self.x)} components but momentum has {len(self.p)}"
            )
        if not self.x:
            raise DimensionError("phase points need dimension at least 1")
        if not all(math.isfinite(v) for v in self.x + self.p):
            raise ValueError(f"phase point has non-finite entries: {self.x + self.p}")

    @property
    def dim(self) -> int:
        return len(self.x)

    @property
    def flat(self) -> tuple[float, ...]:
        """The point as a flat tuple in the package-wide variable order."""
        return self.x + self.p

    @classmethod
    def from_flat(cls, values: Sequence[float]) -> "PhasePoint":
        values = tuple(float(v) for v in values)
        if len(values) % 2 != 0:
            raise DimensionError(f"flat phase vector has odd length {len(values)}")
        n = len(values) // 2
        return cls(values[:n], values[n:])

    def __str__(self) -> str:
        return f"(x={self.x}, p={self.p})"


def sample_box(
    x_box: Iterable[tuple[float, float]],
    p_box: Iterable[tuple[float, float]],
    count: int,
    seed: int,
) -> list[PhasePoint]:
    """Draw ``count`` uniform points from a coordinate box, reproducibly.

    ``x_box`` and ``p_box`` are sequences of (low, high) pairs, one per
    coordinate.  The same seed always yields the same point list.
    """
    x_box = [(float(lo), float(hi)) for lo, hi in x_box]
    p_box = [(float(lo), float(hi)) for lo, hi in p_box]
    if len(x_box) != len(p_box):
        raise DimensionError(
            f"x box has {len(x_box)} intervals but p box has {len(p_box)}"
        )
    for lo, hi in x_box + p_box:
        if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
            raise ValueError(f"invalid sampling interval ({lo}, {hi})")
    rng = np.random.default_rng(seed)
    points = []
    for _ in range(count):
        xs = [rng.uniform(lo, hi) for lo, hi in x_box]
        ps = [rng.uniform(lo, hi) for lo, hi in p_box]
        points.append(PhasePoint(tuple(xs), tuple(ps)))
    return points
