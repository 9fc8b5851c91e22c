"""Tail statistics and their Monte Carlo estimators.

Two per-trajectory statistics drive everything:

* the consistency gap, max f over the box minus the best value seen, and
* the dispersion (max-min distance), the largest distance from any box
  point to its nearest iterate.

The dispersion's sup over the box is bracketed on a probe lattice: the
min-distance field is 1-Lipschitz, so the true sup lies within
resolution*sqrt(d)/2 above the lattice maximum. Tail events are therefore
counted conservatively (lattice value + error bound) with the optimistic
count kept as a diagnostic. All tail estimates carry exact Clopper-Pearson
intervals; the probabilities of interest sit near 0 and 1 where normal
approximations are at their worst.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import betaincinv

from . import _kernels
from .core import AlgorithmDef, Trajectory, TrajectoryBatch, run_batch
from .objectives import Objective
from .rng import derive_stream
from .space import Box, probe_grid

KINDS = ("sampling", "consistency")


def consistency_gap(traj: Trajectory, obj: Objective) -> float:
    """known_max minus the best value along the trajectory, floored at 0."""
    if obj.known_max is None:
        raise ValueError(f"objective '{obj.name}' has no certified maximum")
    gap = obj.known_max - float(traj.values.max())
    return gap if gap > 0.0 else 0.0


def grid_error_bound(resolution: float, dim: int) -> float:
    return resolution * math.sqrt(dim) / 2.0


def max_min_dist(
    traj: Trajectory, box: Box, resolution: float
) -> tuple[float, float]:
    """Dispersion of the trajectory measured on a probe lattice.

    Returns (value, error_bound) with the true sup in
    [value, value + error_bound].
    """
    if not resolution > 0.0:
        raise ValueError("resolution must be positive")
    grid = probe_grid(box, resolution)
    value = math.sqrt(_kernels.max_min_sqdist(traj.points, grid))
    return value, grid_error_bound(resolution, box.dim)


def clopper_pearson(successes: int, M: int, confidence: float = 0.95) -> tuple[float, float]:
    """Exact equal-tailed binomial interval via Beta quantiles."""
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    if M < 1 or not 0 <= successes <= M:
        raise ValueError("need 0 <= successes <= M with M >= 1")
    alpha = 1.0 - confidence
    lo = 0.0 if successes == 0 else float(betaincinv(successes, M - successes + 1, alpha / 2.0))
    hi = 1.0 if successes == M else float(betaincinv(successes + 1, M - successes, 1.0 - alpha / 2.0))
    return lo, hi


@dataclass(frozen=True)
class TailEntry:
    n: int
    estimate: float
    ci_lo: float
    ci_hi: float
    M: int


@dataclass(frozen=True)
class TailCurve:
    kind: str
    epsilon: float
    entries: tuple[TailEntry, ...]
    diagnostics: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = ["kind,epsilon,n,estimate,ci_lo,ci_hi,M"]
        for e in self.entries:
            lines.append(
                f"{self.kind},{self.epsilon!r},{e.n},{e.estimate!r},"
                f"{e.ci_lo!r},{e.ci_hi!r},{e.M}"
            )
        return "\n".join(lines) + "\n"


def batch_seed_for(master_seed: int, n: int) -> int:
    """Documented tuple hashing for per-horizon batches: the batch at
    horizon n uses master derive_stream(master_seed, n), and trajectory i
    inside it uses derive_stream(derive_stream(master_seed, n), i)."""
    return derive_stream(master_seed, n)


def _sampling_counts(batch, grid, epsilon, err):
    conservative = 0
    optimistic = 0
    for traj in batch.trajectories:
        if _kernels.dispersion_exceeds(traj.points, grid, epsilon - err):
            conservative += 1
            if _kernels.dispersion_exceeds(traj.points, grid, epsilon):
                optimistic += 1
    return conservative, optimistic


def _consistency_count(batch, obj, epsilon):
    return sum(1 for t in batch.trajectories if consistency_gap(t, obj) > epsilon)


def _validate_n_list(n_list):
    if not n_list:
        raise ValueError("n_list must be nonempty")
    if any(n < 0 for n in n_list):
        raise ValueError("horizons must be nonnegative")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")


def _prefix(traj: Trajectory, n: int) -> Trajectory:
    return Trajectory(traj.seed, traj.points[: n + 1], traj.values[: n + 1])


def tail_batches(
    alg: AlgorithmDef,
    obj: Objective,
    n_list: list[int],
    M: int,
    master_seed: int,
    threads: int = 1,
    prefix_mode: bool = False,
) -> dict[int, TrajectoryBatch]:
    """One batch per horizon. Fresh seeds per horizon by default; in
    prefix mode a single batch at max(n_list) is reused through prefixes
    (cheaper, but estimates across horizons share randomness)."""
    _validate_n_list(n_list)
    if prefix_mode:
        top = max(n_list)
        full = run_batch(alg, obj, top, batch_seed_for(master_seed, top), M, threads)
        out = {}
        for n in n_list:
            trajs = tuple(_prefix(t, n) for t in full.trajectories)
            out[n] = TrajectoryBatch(
                trajs, full.master_seed, n, full.algorithm, full.objective
            )
        return out
    return {
        n: run_batch(alg, obj, n, batch_seed_for(master_seed, n), M, threads)
        for n in n_list
    }


def tail_curve_from_batches(
    batches: dict[int, TrajectoryBatch],
    obj: Objective,
    kind: str,
    epsilon: float,
    resolution: float,
    confidence: float = 0.95,
) -> TailCurve:
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    diagnostics: dict = {}
    entries = []
    if kind == "sampling":
        box = obj.domain
        err = grid_error_bound(resolution, box.dim)
        if not epsilon > 2.0 * err:
            raise ValueError(
                f"sampling tail at epsilon={epsilon} needs resolution < "
                f"{epsilon / math.sqrt(box.dim)} (got {resolution}): the grid "
                "error bound could flip the event"
            )
        grid = probe_grid(box, resolution)
        diagnostics["resolution"] = resolution
        diagnostics["error_bound"] = err
        diagnostics["optimistic_estimates"] = {}
        for n in sorted(batches):
            batch = batches[n]
            M = len(batch)
            cons, opt = _sampling_counts(batch, grid, epsilon, err)
            lo, hi = clopper_pearson(cons, M, confidence)
            entries.append(TailEntry(n, cons / M, lo, hi, M))
            diagnostics["optimistic_estimates"][n] = opt / M
    else:
        for n in sorted(batches):
            batch = batches[n]
            M = len(batch)
            count = _consistency_count(batch, obj, epsilon)
            lo, hi = clopper_pearson(count, M, confidence)
            entries.append(TailEntry(n, count / M, lo, hi, M))
    return TailCurve(kind, epsilon, tuple(entries), diagnostics)


def tail_curve(
    alg: AlgorithmDef,
    obj: Objective,
    kind: str,
    epsilon: float,
    n_list: list[int],
    M: int,
    master_seed: int,
    resolution: float,
    threads: int = 1,
    prefix_mode: bool = False,
    confidence: float = 0.95,
) -> TailCurve:
    """Monte Carlo tail curve P(statistic > epsilon) over the horizons."""
    batches = tail_batches(alg, obj, n_list, M, master_seed, threads, prefix_mode)
    return tail_curve_from_batches(batches, obj, kind, epsilon, resolution, confidence)


def check_modus_ponens_inclusion(
    batch: TrajectoryBatch,
    obj: Objective,
    epsilon: float,
    resolution: Optional[float] = None,
) -> int:
    """Count violations of the inclusion {gap > eps} within {far from argmax}.

    With delta = epsilon / L, a gap above epsilon forces every iterate to
    sit farther than delta from the maximizer (otherwise the Lipschitz bound
    would close the gap), and the distance to the maximizer lower-bounds the
    dispersion sup. The returned count is therefore 0 unless something is
    broken. When `resolution` is given, the dispersion statement itself is
    also cross-checked conservatively on the probe lattice and any failure
    is folded into the count.
    """
    if obj.known_argmax is None or obj.known_max is None:
        raise ValueError(f"objective '{obj.name}' has no certified maximizer")
    delta = epsilon / obj.lipschitz_L
    argmax = np.ascontiguousarray(obj.known_argmax, dtype=np.float64)
    grid = None
    err = 0.0
    if resolution is not None:
        grid = probe_grid(obj.domain, resolution)
        err = grid_error_bound(resolution, obj.domain.dim)
    violations = 0
    for traj in batch.trajectories:
        if consistency_gap(traj, obj) <= epsilon:
            continue
        nearest = math.sqrt(_kernels.min_sqdist(traj.points, argmax))
        if nearest <= delta:
            violations += 1
            continue
        if grid is not None and delta - err >= 0.0:
            if not _kernels.dispersion_exceeds(traj.points, grid, delta - err):
                violations += 1
    return violations


@dataclass(frozen=True)
class StarvedBall:
    center: np.ndarray
    fraction: float
    threshold: float
    index: int


def find_starved_ball(batch: TrajectoryBatch, cover, eps2: float) -> Optional[StarvedBall]:
    """Pick the cover ball the batch avoids most often, if it is avoided at
    least an eps2/(2*N) fraction of the time (the pigeonhole threshold for
    an N-ball cover); otherwise None."""
    n_centers = cover.count
    threshold = eps2 / (2.0 * n_centers)
    r2 = cover.radius * cover.radius
    best_idx = -1
    best_frac = -1.0
    for idx in range(n_centers):
        center = np.ascontiguousarray(cover.centers[idx])
        misses = sum(
            1
            for traj in batch.trajectories
            if _kernels.min_sqdist(traj.points, center) >= r2
        )
        frac = misses / len(batch)
        if frac > best_frac:
            best_idx, best_frac = idx, frac
    if best_frac >= threshold:
        return StarvedBall(
            center=cover.centers[best_idx].copy(),
            fraction=best_frac,
            threshold=threshold,
            index=best_idx,
        )
    return None
