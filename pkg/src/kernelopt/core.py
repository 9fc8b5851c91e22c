"""Algorithms as (initial sampler, kernel sequence), and trajectory runs.

An algorithm is a function-independent initial sampler plus a family of
step kernels. The kernel at step n receives the full history (points and
their evaluations) and returns a sampler over the box; any internal state
an algorithm needs must be recomputed from that history, never carried
between calls. Trajectories are deterministic functions of
(algorithm, objective, horizon, seed), where the seed is the initial
64-bit state of a counter-based stream (see rng.derive_stream).
"""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .objectives import Objective
from .rng import MASK64, derive_stream
from .space import Box


class ContractViolation(RuntimeError):
    """A kernel emitted a point outside the algorithm's box."""


@dataclass(frozen=True)
class History:
    """Points visited so far and their objective values, oldest first."""

    points: np.ndarray  # (k+1, d)
    values: np.ndarray  # (k+1,)

    def __len__(self) -> int:
        return self.points.shape[0]


# A sampler draws one point: stream state in, (point, new state) out.
SamplerFn = Callable[[int], tuple[np.ndarray, int]]


@dataclass(frozen=True)
class Sampler:
    name: str
    draw: SamplerFn


KernelFn = Callable[[int, History], Sampler]


@dataclass(frozen=True)
class AlgorithmDef:
    """The pair (initial law, kernel sequence) plus its box.

    `initial` must not depend on any objective value; the law of the first
    point is the same for every function. `kernel(n, history)` may depend
    on the step index and the full history including evaluations.
    """

    name: str
    box: Box
    initial: Sampler
    kernel: KernelFn
    diagnostics: Any = None


@dataclass(frozen=True)
class Trajectory:
    seed: int
    points: np.ndarray  # (n+1, d)
    values: np.ndarray  # (n+1,)

    @property
    def horizon(self) -> int:
        return self.points.shape[0] - 1


@dataclass(frozen=True)
class TrajectoryBatch:
    trajectories: tuple[Trajectory, ...]
    master_seed: int
    horizon: int
    algorithm: str = ""
    objective: str = ""

    def __len__(self) -> int:
        return len(self.trajectories)

    def points(self) -> np.ndarray:
        """All trajectories stacked as an (M, n+1, d) array."""
        return np.stack([t.points for t in self.trajectories])


def _checked_draw(alg: AlgorithmDef, sampler: Sampler, state: int, step: int):
    x, state = sampler.draw(state)
    x = np.asarray(x, dtype=np.float64)
    if not alg.box.contains(x):
        raise ContractViolation(
            f"algorithm '{alg.name}' emitted out-of-box point {x.tolist()} at step {step}"
        )
    return x, state


def run_trajectory(alg: AlgorithmDef, obj: Objective, n: int, seed: int) -> Trajectory:
    """Run n kernel steps after the initial draw (n+1 points total)."""
    if obj.domain != alg.box:
        raise ValueError("objective domain and algorithm box differ")
    if n < 0:
        raise ValueError("horizon must be nonnegative")
    seed = int(seed) & MASK64
    d = alg.box.dim
    pts = np.empty((n + 1, d), dtype=np.float64)
    vals = np.empty(n + 1, dtype=np.float64)
    state = seed
    x, state = _checked_draw(alg, alg.initial, state, 0)
    pts[0] = x
    vals[0] = obj.eval(x)
    for k in range(n):
        sampler = alg.kernel(k, History(pts[: k + 1], vals[: k + 1]))
        x, state = _checked_draw(alg, sampler, state, k + 1)
        pts[k + 1] = x
        vals[k + 1] = obj.eval(x)
    return Trajectory(seed=seed, points=pts, values=vals)


def run_batch(
    alg: AlgorithmDef,
    obj: Objective,
    n: int,
    master_seed: int,
    M: int,
    threads: int = 1,
) -> TrajectoryBatch:
    """M independent trajectories with per-index derived seeds.

    Trajectory i uses seed derive_stream(master_seed, i); results are
    ordered by index no matter how execution is scheduled, so serial and
    threaded runs serialize identically.
    """
    if M < 1:
        raise ValueError("batch size M must be >= 1")
    seeds = [derive_stream(master_seed, i) for i in range(M)]

    def one(i: int) -> Trajectory:
        try:
            return run_trajectory(alg, obj, n, seeds[i])
        except ContractViolation as exc:
            raise ContractViolation(f"trajectory {i}: {exc}") from exc

    if threads <= 1:
        trajs = [one(i) for i in range(M)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trajs = list(pool.map(one, range(M)))
    return TrajectoryBatch(
        trajectories=tuple(trajs),
        master_seed=int(master_seed) & MASK64,
        horizon=n,
        algorithm=alg.name,
        objective=obj.name,
    )


def batch_to_csv(batch: TrajectoryBatch) -> str:
    """Line-oriented CSV: seed, step, x_0..x_{d-1}, f_value.

    Floats are serialized with repr (shortest round-trip form), so equal
    batches serialize byte-identically.
    """
    d = batch.trajectories[0].points.shape[1]
    buf = io.StringIO()
    cols = ",".join(f"x_{k}" for k in range(d))
    buf.write(f"seed,step,{cols},f_value\n")
    for traj in batch.trajectories:
        for step in range(traj.points.shape[0]):
            coords = ",".join(repr(float(v)) for v in traj.points[step])
            buf.write(f"{traj.seed},{step},{coords},{repr(float(traj.values[step]))}\n")
    return buf.getvalue()


def write_batch_csv(batch: TrajectoryBatch, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(batch_to_csv(batch))
