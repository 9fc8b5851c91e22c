"""Concrete algorithm definitions: random search, AdaLIPO, a compact
CMA-style Gaussian sampler, and two deliberately non-exploring
counterexamples (half-box sampler, stuck hill climber).

All of them fit the (initial sampler, kernel sequence) contract from
core.py: kernels are pure functions of (step, history, stream state), and
anything stateful (the CMA mean/covariance) is recomputed from the history
on every call.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from . import _kernels, rng
from .core import AlgorithmDef, History, Sampler
from .space import Box

_GAUSS_BOX_BUDGET = 1000


class FallbackCounter:
    """Thread-safe tally of rejection-budget exhaustions (diagnostic only)."""

    def __init__(self):
        self._lock = threading.Lock()
        self.count = 0

    def bump(self):
        with self._lock:
            self.count += 1


def _uniform_sampler(box: Box, name: str = "uniform") -> Sampler:
    lo, hi = box.lo, box.hi

    def draw(state):
        pts, state = _kernels.uniform_points(state, 1, lo, hi)
        return pts[0], state

    return Sampler(name, draw)


def random_search(box: Box) -> AlgorithmDef:
    """Uniform initial law and the constant uniform kernel."""
    uniform = _uniform_sampler(box)
    return AlgorithmDef(
        name="random_search",
        box=box,
        initial=uniform,
        kernel=lambda n, h: uniform,
    )


def halfspace_sampler(box: Box) -> AlgorithmDef:
    """Uniform on the lower half of the box along every axis; never emits a
    point in the upper half. The canonical non-space-sampling algorithm."""
    half = Box(box.lo, box.lo + 0.5 * (box.hi - box.lo))
    uniform = _uniform_sampler(half, name="uniform_halfbox")
    return AlgorithmDef(
        name="halfspace",
        box=box,
        initial=uniform,
        kernel=lambda n, h: uniform,
    )


# ---------------------------------------------------------------------------
# AdaLIPO


@dataclass(frozen=True)
class AdaLipoParams:
    grid_alpha: float = 0.01
    max_rejections: int = 10**6
    explore_prob: float = 0.1
    # The displayed kernel is pure exploitation; the Bernoulli exploration
    # mix guards against stalls from an underestimated slope. pure_exploit
    # reproduces the bare kernel (and consumes no Bernoulli draw).
    pure_exploit: bool = False

    def __post_init__(self):
        if not self.grid_alpha > 0.0:
            raise ValueError("grid_alpha must be positive")
        if self.max_rejections < 1:
            raise ValueError("max_rejections must be >= 1")
        if not self.pure_exploit and not 0.0 < self.explore_prob <= 1.0:
            raise ValueError("explore_prob must lie in (0, 1]")


def max_slope(points: np.ndarray, values: np.ndarray) -> float:
    """Raw largest |value difference| / distance over sample pairs.

    0 when fewer than two points or all points coincide. Permutation
    invariant, and scales linearly when all values are scaled.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    values = np.ascontiguousarray(values, dtype=np.float64)
    return _kernels.pairwise_max_slope(points, values)


def snap_up_to_grid(value: float, alpha: float) -> float:
    """Smallest (1+alpha)**k, k integer, that is >= value (0 stays 0)."""
    if value <= 0.0:
        return 0.0
    k = math.ceil(math.log(value) / math.log1p(alpha) - 1e-12)
    snapped = (1.0 + alpha) ** k
    while snapped < value:
        k += 1
        snapped = (1.0 + alpha) ** k
    while k > -(10**9) and (1.0 + alpha) ** (k - 1) >= value:
        k -= 1
        snapped = (1.0 + alpha) ** k
    return snapped


def estimate_lipschitz(h: History, grid_alpha: float = 0.01) -> float:
    """Slope estimate from the history, rounded up to the (1+alpha)**k grid."""
    return snap_up_to_grid(max_slope(h.points, h.values), grid_alpha)


def adalipo_acceptable(
    x: np.ndarray, points: np.ndarray, values: np.ndarray, lip: float
) -> bool:
    """Re-check of the acceptance inequality used by the AdaLIPO kernel:
    min_i (f(X_i) + lip * dist(x, X_i)) >= max_i f(X_i)."""
    diff = points - np.asarray(x, dtype=np.float64)
    d = np.sqrt((diff * diff).sum(axis=1))
    return bool((values + lip * d).min() >= values.max())


def adalipo(box: Box, params: AdaLipoParams = AdaLipoParams()) -> AlgorithmDef:
    """Uniform start; each step draws uniform candidates until one keeps
    every sample's slope-based upper bound above the incumbent maximum.

    The acceptance region always contains the incumbent argmax, so it is
    never empty, but it can be numerically tiny: after `max_rejections`
    failed candidates the kernel falls back to the last uniform draw and
    bumps the diagnostics counter instead of hanging.
    """
    lo, hi = box.lo, box.hi
    diag = FallbackCounter()
    uniform = _uniform_sampler(box)

    def kernel(n: int, h: History) -> Sampler:
        def draw(state):
            if not params.pure_exploit:
                state, u = rng.uniform(state)
                if u < params.explore_prob:
                    pts, state = _kernels.uniform_points(state, 1, lo, hi)
                    return pts[0], state
            lip = estimate_lipschitz(h, params.grid_alpha)
            x, state, _, accepted = _kernels.adalipo_rejection(
                state, lo, hi, h.points, h.values, lip, params.max_rejections
            )
            if not accepted:
                diag.bump()
            return x, state

        return Sampler("adalipo_kernel", draw)

    return AlgorithmDef(
        name="adalipo", box=box, initial=uniform, kernel=kernel, diagnostics=diag
    )


# ---------------------------------------------------------------------------
# CMA-lite: teaching-scale Gaussian kernel with history-recomputed moments
# (not reference CMA-ES: no step-size control or evolution paths).


@dataclass(frozen=True)
class CmaLiteParams:
    mean0: np.ndarray
    sigma0: float
    learning_rate_mean: float = 0.5
    learning_rate_cov: float = 0.5
    elite_fraction: float = 0.5

    def __post_init__(self):
        object.__setattr__(
            self, "mean0", np.ascontiguousarray(self.mean0, dtype=np.float64)
        )
        if not self.sigma0 > 0.0:
            raise ValueError("sigma0 must be positive")
        for label, v in (
            ("learning_rate_mean", self.learning_rate_mean),
            ("learning_rate_cov", self.learning_rate_cov),
            ("elite_fraction", self.elite_fraction),
        ):
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{label} must lie in (0, 1]")


def cma_lite_moments(h: History, params: CmaLiteParams) -> tuple[np.ndarray, np.ndarray]:
    """Deterministically refold the mean/covariance over history prefixes.

    Prefix k (points 0..k, k = 0..len-1) contributes one exponential update
    using its top ceil(elite_fraction*(k+1)) points by value (ties resolved
    toward earlier samples). Rerunning on the same history reproduces the
    same moments exactly.
    """
    d = h.points.shape[1]
    mu = params.mean0.copy()
    cov = params.sigma0 * params.sigma0 * np.eye(d)
    lr_m = params.learning_rate_mean
    lr_c = params.learning_rate_cov
    for k in range(len(h)):
        count = math.ceil(params.elite_fraction * (k + 1))
        order = np.argsort(-h.values[: k + 1], kind="stable")[:count]
        elite = h.points[: k + 1][order]
        emean = elite.mean(axis=0)
        centered = elite - emean
        ecov = centered.T @ centered / count
        mu = (1.0 - lr_m) * mu + lr_m * emean
        cov = (1.0 - lr_c) * cov + lr_c * (ecov + 1e-12 * np.eye(d))
    return mu, cov


def _gaussian_sampler(box: Box, mean: np.ndarray, chol: np.ndarray, name: str) -> Sampler:
    lo, hi = box.lo, box.hi

    def draw(state):
        x, state, _, _ = _kernels.gaussian_box_rejection(
            state, mean, chol, lo, hi, _GAUSS_BOX_BUDGET
        )
        return x, state

    return Sampler(name, draw)


def cma_lite(box: Box, params: CmaLiteParams) -> AlgorithmDef:
    if not box.contains(params.mean0):
        raise ValueError("mean0 must lie inside the box")
    init_chol = params.sigma0 * np.eye(box.dim)
    initial = _gaussian_sampler(box, params.mean0, init_chol, "cma_lite_initial")

    def kernel(n: int, h: History) -> Sampler:
        mu, cov = cma_lite_moments(h, params)
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - regularized
            raise RuntimeError(
                "cma_lite covariance lost positive definiteness despite the "
                "1e-12 regularizer; this is a bug"
            ) from exc
        return _gaussian_sampler(box, mu, chol, "cma_lite_kernel")

    return AlgorithmDef(name="cma_lite", box=box, initial=initial, kernel=kernel)


def stuck_hill_climber(box: Box, step_sigma: float) -> AlgorithmDef:
    """Uniform start, then isotropic Gaussian steps centered on the best
    point seen so far (ties toward the earliest sample). For small
    step_sigma this algorithm parks next to its first decent find."""
    if not step_sigma > 0.0:
        raise ValueError("step_sigma must be positive")
    chol = step_sigma * np.eye(box.dim)

    def kernel(n: int, h: History) -> Sampler:
        incumbent = h.points[int(np.argmax(h.values))]
        return _gaussian_sampler(box, incumbent, chol, "hill_kernel")

    return AlgorithmDef(
        name="stuck_hill",
        box=box,
        initial=_uniform_sampler(box),
        kernel=kernel,
    )
