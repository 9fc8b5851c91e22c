"""Lipschitz test objectives with certified constants.

Each objective carries a certified Lipschitz upper bound (exact where a
closed form exists, otherwise a gradient-grid bound with a 1.5 safety
factor) and, where known, its exact maximum and maximizer. `f_tilde` builds
the adversarial variant of a base objective: a cone-shaped bump inside an
open ball that leaves the function bit-identical outside the ball while
pushing the global maximum strictly above the base maximum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from .space import Box, probe_grid

_ACKLEY_A = 20.0
_ACKLEY_B = 0.2
_ACKLEY_C = 2.0 * math.pi


@dataclass(frozen=True)
class Objective:
    """Evaluable function on a box with a certified Lipschitz bound.

    `batch` maps an (m, d) array of points to an (m,) array of values and is
    the single source of truth; `eval` is the scalar convenience wrapper.
    """

    name: str
    domain: Box
    batch: Callable[[np.ndarray], np.ndarray]
    lipschitz_L: float
    known_max: Optional[float] = None
    known_argmax: Optional[np.ndarray] = None
    known_min: Optional[float] = None
    meta: dict[str, Any] = field(default_factory=dict)

    def eval(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=np.float64)
        return float(self.batch(x[None, :])[0])

    def eval_batch(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(self.batch(np.asarray(pts, dtype=np.float64)), dtype=np.float64)


def _ackley(pts: np.ndarray) -> np.ndarray:
    d = pts.shape[1]
    rms = np.sqrt((pts * pts).sum(axis=1) / d)
    cos_mean = np.cos(_ACKLEY_C * pts).sum(axis=1) / d
    return (
        -_ACKLEY_A * np.exp(-_ACKLEY_B * rms)
        - np.exp(cos_mean)
        + _ACKLEY_A
        + math.e
    )


def _ackley_grad_norm(pts: np.ndarray) -> np.ndarray:
    d = pts.shape[1]
    rms = np.sqrt((pts * pts).sum(axis=1) / d)
    safe = np.maximum(rms, 1e-300)
    g1 = (_ACKLEY_A * _ACKLEY_B * np.exp(-_ACKLEY_B * rms) / (d * safe))[:, None] * pts
    g2 = (_ACKLEY_C / d) * np.sin(_ACKLEY_C * pts) * np.exp(
        np.cos(_ACKLEY_C * pts).sum(axis=1) / d
    )[:, None]
    g = g1 + g2
    return np.sqrt((g * g).sum(axis=1))


def reverse_ackley(box: Box) -> Objective:
    """Negated Ackley function (a=20, b=0.2, c=2*pi): global max 0 at the
    origin. The Lipschitz bound is the max gradient norm on a fine lattice
    times a 1.5 safety factor."""
    grid = probe_grid(box, float(box.sides.max()) / 256.0)
    lip = 1.5 * float(_ackley_grad_norm(grid).max())
    origin = np.zeros(box.dim)
    has_origin = box.contains(origin)
    return Objective(
        name="reverse_ackley",
        domain=box,
        batch=lambda pts: -_ackley(pts),
        lipschitz_L=lip,
        known_max=0.0 if has_origin else None,
        known_argmax=origin if has_origin else None,
    )


def sphere_max(box: Box) -> Objective:
    """Negated squared distance to the box center; max 0 at the center.

    The certified constant 2*diam(box) is twice the tight bound, kept
    deliberately loose so the certificate is unarguable."""
    center = box.center
    half_diag = 0.5 * box.diameter

    def batch(pts):
        diff = pts - center
        return -(diff * diff).sum(axis=1)

    return Objective(
        name="sphere_max",
        domain=box,
        batch=batch,
        lipschitz_L=2.0 * box.diameter,
        known_max=0.0,
        known_argmax=center,
        known_min=-(half_diag * half_diag),
    )


def piecewise_peak(box: Box, peak: np.ndarray) -> Objective:
    """Negated distance to `peak`: 1-Lipschitz exactly (tight along rays),
    max 0 at the peak, min at the farthest box corner."""
    peak = np.ascontiguousarray(peak, dtype=np.float64)
    if not box.contains(peak):
        raise ValueError("peak must lie inside the box")
    far = np.maximum(peak - box.lo, box.hi - peak)
    fmin = -float(math.sqrt(float((far * far).sum())))

    def batch(pts):
        diff = pts - peak
        return -np.sqrt((diff * diff).sum(axis=1))

    return Objective(
        name="piecewise_peak",
        domain=box,
        batch=batch,
        lipschitz_L=1.0,
        known_max=0.0,
        known_argmax=peak,
        known_min=fmin,
    )


def _range_bounds(base: Objective, spacing: float) -> tuple[float, float]:
    """Certified [min, max] bracket for the base objective, from known
    values where present, otherwise grid extrema widened by the Lipschitz
    cell-error bound."""
    need_grid = base.known_max is None or base.known_min is None
    if need_grid:
        grid = probe_grid(base.domain, spacing)
        vals = base.eval_batch(grid)
        err = base.lipschitz_L * spacing * math.sqrt(base.domain.dim) / 2.0
    fmax = base.known_max if base.known_max is not None else float(vals.max()) + err
    fmin = base.known_min if base.known_min is not None else float(vals.min()) - err
    return fmin, fmax


def f_tilde(
    base: Objective,
    c: np.ndarray,
    eps1: float,
    factor: float = 2.0,
    offset: float = 1.0,
) -> Objective:
    """Adversarial bump variant of `base`.

    Inside the open ball B(c, eps1/2) the value is
        base(x) + factor * (1 - dist(x, c) / (eps1/2)) * H,
    with H = fmax - fmin + offset; outside the ball the value is the
    base value, returned unchanged (bit-equal). Defaults (factor=2,
    offset=1) make the new maximum exceed the old one by at least
    fmax - fmin + 2 even for constant base functions; factor=3, offset=0
    selects the older published variant.
    """
    c = np.ascontiguousarray(c, dtype=np.float64)
    if not base.domain.contains(c):
        raise ValueError("bump center must lie inside the domain")
    if not (eps1 > 0.0 and math.isfinite(eps1)):
        raise ValueError("eps1 must be positive and finite")
    fmin, fmax = _range_bounds(base, eps1 / 16.0)
    height_unit = fmax - fmin + offset
    radius = eps1 / 2.0

    def batch(pts):
        out = np.array(base.batch(pts), dtype=np.float64, copy=True)
        diff = pts - c
        d = np.sqrt((diff * diff).sum(axis=1))
        inside = d < radius
        if inside.any():
            out[inside] += factor * (1.0 - d[inside] / radius) * height_unit
        return out

    lip = base.lipschitz_L + 2.0 * factor * height_unit / eps1
    obj = Objective(
        name=f"f_tilde({base.name})",
        domain=base.domain,
        batch=batch,
        lipschitz_L=lip,
        known_min=base.known_min,
        meta={
            "base": base.name,
            "center": c,
            "eps1": eps1,
            "factor": factor,
            "offset": offset,
            "height": factor * height_unit,
            "base_max": fmax,
            "base_min": fmin,
        },
    )
    # The bump apex is the global maximum whenever the cone slope dominates
    # the base Lipschitz constant; all pipeline objectives satisfy this.
    if base.lipschitz_L <= factor * height_unit / radius:
        peak_value = float(obj.batch(c[None, :])[0])
        object.__setattr__(obj, "known_max", peak_value)
        object.__setattr__(obj, "known_argmax", c)
    return obj
