"""Compact box search spaces: Euclidean metric, probe lattices, ball covers.

Everything here is a pure function of its arguments. A cover is a finite set
of ball centers whose closed balls of the given radius cover the box, which
is validated constructively on a fine probe lattice (spacing radius/8). The
per-axis spacing carries a 1e-9 shrink so that the validated points also lie
strictly inside the corresponding open balls up to that tolerance; coverage
of a compact box by open balls can only fail on the measure-zero boundary
set that the shrink steers the lattice away from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

# Absorbs the deliberate 1e-9 spacing shrink when a side length is an exact
# multiple of the spacing, so the count stays minimal for the grid scheme.
_CEIL_SLACK = 1e-6

_MAX_ESCALATIONS = 64


@dataclass(frozen=True)
class Box:
    """Axis-aligned compact box [lo_k, hi_k] with nonempty interior."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.ascontiguousarray(self.lo, dtype=np.float64)
        hi = np.ascontiguousarray(self.hi, dtype=np.float64)
        if lo.ndim != 1 or hi.ndim != 1 or lo.shape != hi.shape:
            raise ValueError("box bounds must be 1-D arrays of equal length")
        if lo.size == 0:
            raise ValueError("box must have at least one dimension")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise ValueError("box bounds must be finite")
        if not (lo < hi).all():
            raise ValueError("box must satisfy lo[k] < hi[k] for every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def sides(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    @property
    def diameter(self) -> float:
        return dist(self.lo, self.hi)

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.lo.shape:
            return False
        return bool(((x >= self.lo - tol) & (x <= self.hi + tol)).all())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Box)
            and np.array_equal(self.lo, other.lo)
            and np.array_equal(self.hi, other.hi)
        )

    def __hash__(self):
        return hash((self.lo.tobytes(), self.hi.tobytes()))


def dist(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance between two points of equal dimension."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    return float(math.sqrt(float((diff * diff).sum())))


def _axis_counts(sides: np.ndarray, spacing: float) -> np.ndarray:
    return np.maximum(1, np.ceil(sides / spacing - _CEIL_SLACK).astype(np.int64))


def _lattice(box: Box, counts: np.ndarray) -> np.ndarray:
    """Cell-center lattice with counts[k] points per axis, axis 0 slowest."""
    axes = [
        box.lo[k] + box.sides[k] * (2 * np.arange(counts[k]) + 1) / (2 * counts[k])
        for k in range(box.dim)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.ascontiguousarray(
        np.stack([m.ravel() for m in mesh], axis=1), dtype=np.float64
    )


def probe_grid(box: Box, spacing: float) -> np.ndarray:
    """Deterministic lattice with a point within spacing/2 per axis of any
    box point (hence within spacing*sqrt(d)/2 in Euclidean distance).

    Returned as an (N, d) array, rows ordered lexicographically by axis
    index. A spacing wider than every side degenerates to the box center.
    """
    if not (spacing > 0.0 and math.isfinite(spacing)):
        raise ValueError("spacing must be positive and finite")
    return _lattice(box, _axis_counts(box.sides, spacing))


@dataclass(frozen=True)
class Cover:
    """Finite ball cover of a box: closed balls of `radius` at `centers`."""

    radius: float
    centers: np.ndarray
    box: Box

    @property
    def count(self) -> int:
        return self.centers.shape[0]


def validate_cover(box: Box, centers: np.ndarray, radius: float) -> bool:
    """Closed-ball coverage check on a probe lattice of spacing radius/8."""
    probe = probe_grid(box, (radius / 8.0) * (1.0 - 1e-9))
    worst_sq = _kernels.max_min_sqdist(centers, probe)
    return worst_sq <= radius * radius


def build_cover(box: Box, radius: float) -> Cover:
    """Cover the box with closed balls of `radius` on an axis-aligned grid.

    Per-axis spacing is 2*radius/sqrt(d) shrunk by 1e-9; the per-axis count
    is the minimal ceil(side/spacing) for this scheme, and centers sit at
    the cell centers (so the outermost ones are inset half a cell from the
    faces). If lattice validation ever failed, the per-axis counts would be
    bumped by one and revalidated, which terminates because cell diagonals
    shrink below the radius.
    """
    if not (radius > 0.0 and math.isfinite(radius)):
        raise ValueError("cover radius must be positive and finite")
    spacing = (2.0 * radius / math.sqrt(box.dim)) * (1.0 - 1e-9)
    counts = _axis_counts(box.sides, spacing)
    for _ in range(_MAX_ESCALATIONS):
        centers = _lattice(box, counts)
        if validate_cover(box, centers, radius):
            return Cover(radius=float(radius), centers=centers, box=box)
        counts = counts + 1
    raise RuntimeError("cover construction failed to validate; this is a bug")
