"""Hot numeric kernels, compiled with numba when available.

Every kernel exists in two semantically identical variants:

* a ``*_loop`` variant written as plain nested loops, compiled with
  ``numba.njit`` (the default path), and
* a ``*_numpy`` variant written with vectorized numpy, used when numba is
  unavailable or disabled via ``KERNELOPT_NO_NUMBA=1``.

The random-number consumption of both variants is draw-for-draw identical:
streams are counter-based (see rng.py), so the numpy variants can evaluate a
whole block of future draws as an elementwise function of the counter and
then commit only the draws the loop variant would have consumed. Rejection
samplers exploit this to stay vectorized without changing the sequence.

``benchmarks/bench_kernels.py`` times the two variants against each other.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .rng import DOUBLE_UNIT, GOLDEN, MASK64, advance

_env = os.environ.get("KERNELOPT_NO_NUMBA", "").strip().lower()
NUMBA_DISABLED = _env in {"1", "true", "yes", "on"}

try:
    if NUMBA_DISABLED:
        raise ImportError("numba disabled by KERNELOPT_NO_NUMBA")
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not NUMBA_DISABLED

_U64 = np.uint64
_G = _U64(GOLDEN)
_M1 = _U64(0xBF58476D1CE4E5B9)
_M2 = _U64(0x94D049BB133111EB)
_S30 = _U64(30)
_S27 = _U64(27)
_S31 = _U64(31)
_S11 = _U64(11)
_ONE = _U64(1)
_TWO_PI = 2.0 * math.pi

_BLOCK = 128  # candidate block size for vectorized rejection samplers


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# SplitMix64 plumbing shared by both variants.


def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


if USE_NUMBA:
    _mix = _njit(cache=True, nogil=True)(_mix)


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _uniform_counters(state: int, count: int) -> np.ndarray:
    """Doubles in [0, 1) at counter offsets 1..count from `state`."""
    ks = np.arange(1, count + 1, dtype=np.uint64)
    z = _mix_array(_U64(int(state) & MASK64) + ks * _G)
    return (z >> _S11).astype(np.float64) * DOUBLE_UNIT


def _uniform_open_counters(state: int, count: int) -> np.ndarray:
    """Doubles in (0, 1] at counter offsets 1..count from `state`."""
    ks = np.arange(1, count + 1, dtype=np.uint64)
    z = _mix_array(_U64(int(state) & MASK64) + ks * _G)
    return ((z >> _S11) + _ONE).astype(np.float64) * DOUBLE_UNIT


# ---------------------------------------------------------------------------
# uniform_block


def _uniform_block_loop(state, count):
    out = np.empty(count, dtype=np.float64)
    s = state
    for i in range(count):
        s = s + _G
        out[i] = (_mix(s) >> _S11) * DOUBLE_UNIT
    return out, s


def _uniform_block_numpy(state: int, count: int):
    state = int(state)
    return _uniform_counters(state, count), advance(state, count)


# ---------------------------------------------------------------------------
# uniform_points: `m` points uniform in the box, point-major draw order.


def _uniform_points_loop(state, m, lo, hi):
    d = lo.shape[0]
    out = np.empty((m, d), dtype=np.float64)
    s = state
    for i in range(m):
        for k in range(d):
            s = s + _G
            u = (_mix(s) >> _S11) * DOUBLE_UNIT
            out[i, k] = lo[k] + u * (hi[k] - lo[k])
    return out, s


def _uniform_points_numpy(state: int, m: int, lo, hi):
    state = int(state)
    u = _uniform_counters(state, m * lo.shape[0]).reshape(m, lo.shape[0])
    return lo + u * (hi - lo), advance(state, m * lo.shape[0])


# ---------------------------------------------------------------------------
# normal_block: Box-Muller, two draws per normal (cosine branch only).


def _normal_block_loop(state, count):
    out = np.empty(count, dtype=np.float64)
    s = state
    for i in range(count):
        s = s + _G
        u1 = ((_mix(s) >> _S11) + _ONE) * DOUBLE_UNIT
        s = s + _G
        u2 = ((_mix(s) >> _S11) + _ONE) * DOUBLE_UNIT
        out[i] = math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)
    return out, s


def _normal_block_numpy(state: int, count: int):
    state = int(state)
    u = _uniform_open_counters(state, 2 * count).reshape(count, 2)
    z = np.sqrt(-2.0 * np.log(u[:, 0])) * np.cos(_TWO_PI * u[:, 1])
    return z, advance(state, 2 * count)


# ---------------------------------------------------------------------------
# min_sqdist / max_min_sqdist / dispersion_exceeds


def _min_sqdist_loop(points, x):
    best = math.inf
    for i in range(points.shape[0]):
        sq = 0.0
        for k in range(points.shape[1]):
            diff = points[i, k] - x[k]
            sq += diff * diff
        if sq < best:
            best = sq
    return best


def _min_sqdist_numpy(points, x):
    diff = points - x
    return float(np.min(np.einsum("ik,ik->i", diff, diff)))


def _max_min_sqdist_loop(points, grid):
    best = 0.0
    for g in range(grid.shape[0]):
        mn = math.inf
        for i in range(points.shape[0]):
            sq = 0.0
            for k in range(points.shape[1]):
                diff = points[i, k] - grid[g, k]
                sq += diff * diff
            if sq < mn:
                mn = sq
        if mn > best:
            best = mn
    return best


def _max_min_sqdist_numpy(points, grid, chunk=4096):
    best = 0.0
    for start in range(0, grid.shape[0], chunk):
        block = grid[start : start + chunk]
        diff = block[:, None, :] - points[None, :, :]
        mins = (diff * diff).sum(axis=2).min(axis=1)
        m = float(mins.max())
        if m > best:
            best = m
    return best


def _dispersion_exceeds_loop(points, grid, thr2):
    for g in range(grid.shape[0]):
        covered = False
        for i in range(points.shape[0]):
            sq = 0.0
            for k in range(points.shape[1]):
                diff = points[i, k] - grid[g, k]
                sq += diff * diff
            if sq <= thr2:
                covered = True
                break
        if not covered:
            return True
    return False


def _dispersion_exceeds_numpy(points, grid, thr2, chunk=4096):
    for start in range(0, grid.shape[0], chunk):
        block = grid[start : start + chunk]
        diff = block[:, None, :] - points[None, :, :]
        mins = (diff * diff).sum(axis=2).min(axis=1)
        if bool((mins > thr2).any()):
            return True
    return False


# ---------------------------------------------------------------------------
# pairwise_max_slope: raw Lipschitz-constant estimate from samples.


def _pairwise_max_slope_loop(points, values):
    best = 0.0
    m = points.shape[0]
    for i in range(m):
        for j in range(i + 1, m):
            sq = 0.0
            for k in range(points.shape[1]):
                diff = points[i, k] - points[j, k]
                sq += diff * diff
            if sq > 0.0:
                slope = abs(values[i] - values[j]) / math.sqrt(sq)
                if slope > best:
                    best = slope
    return best


def _pairwise_max_slope_numpy(points, values):
    diff = points[:, None, :] - points[None, :, :]
    dsq = (diff * diff).sum(axis=2)
    vd = np.abs(values[:, None] - values[None, :])
    mask = dsq > 0.0
    if not mask.any():
        return 0.0
    return float((vd[mask] / np.sqrt(dsq[mask])).max())


# ---------------------------------------------------------------------------
# adalipo_rejection: uniform candidates until the history-slope acceptance
# inequality holds; after `budget` failures, one fallback uniform draw.


def _adalipo_rejection_loop(state, lo, hi, pts, vals, lip, budget):
    d = lo.shape[0]
    m = pts.shape[0]
    vmax = vals[0]
    for i in range(1, m):
        if vals[i] > vmax:
            vmax = vals[i]
    x = np.empty(d, dtype=np.float64)
    s = state
    for t in range(budget):
        for k in range(d):
            s = s + _G
            u = (_mix(s) >> _S11) * DOUBLE_UNIT
            x[k] = lo[k] + u * (hi[k] - lo[k])
        ok = True
        for i in range(m):
            sq = 0.0
            for k in range(d):
                diff = x[k] - pts[i, k]
                sq += diff * diff
            if vals[i] + lip * math.sqrt(sq) < vmax:
                ok = False
                break
        if ok:
            return x, s, t, 1
    for k in range(d):
        s = s + _G
        u = (_mix(s) >> _S11) * DOUBLE_UNIT
        x[k] = lo[k] + u * (hi[k] - lo[k])
    return x, s, budget, 0


def _adalipo_rejection_numpy(state, lo, hi, pts, vals, lip, budget):
    d = lo.shape[0]
    vmax = float(vals.max())
    s = int(state)
    tried = 0
    while tried < budget:
        nb = min(_BLOCK, budget - tried)
        u = _uniform_counters(s, nb * d).reshape(nb, d)
        cands = lo + u * (hi - lo)
        diff = cands[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        ok = (vals[None, :] + lip * dist).min(axis=1) >= vmax
        hits = np.flatnonzero(ok)
        if hits.size:
            j = int(hits[0])
            return cands[j].copy(), advance(s, (j + 1) * d), tried + j, 1
        s = advance(s, nb * d)
        tried += nb
    u = _uniform_counters(s, d)
    return lo + u * (hi - lo), advance(s, d), budget, 0


# ---------------------------------------------------------------------------
# gaussian_box_rejection: N(mean, chol chol^T) candidates resampled into the
# box; after `budget` failures, one more candidate clamped coordinatewise.


def _gaussian_box_rejection_loop(state, mean, chol, lo, hi, budget):
    d = mean.shape[0]
    z = np.empty(d, dtype=np.float64)
    x = np.empty(d, dtype=np.float64)
    s = state
    for t in range(budget + 1):
        for k in range(d):
            s = s + _G
            u1 = ((_mix(s) >> _S11) + _ONE) * DOUBLE_UNIT
            s = s + _G
            u2 = ((_mix(s) >> _S11) + _ONE) * DOUBLE_UNIT
            z[k] = math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)
        for r in range(d):
            acc = mean[r]
            for c in range(d):
                acc += chol[r, c] * z[c]
            x[r] = acc
        inside = True
        for k in range(d):
            if x[k] < lo[k] or x[k] > hi[k]:
                inside = False
                break
        if inside:
            return x, s, t, 1
    for k in range(d):
        if x[k] < lo[k]:
            x[k] = lo[k]
        elif x[k] > hi[k]:
            x[k] = hi[k]
    return x, s, budget + 1, 0


def _gaussian_box_rejection_numpy(state, mean, chol, lo, hi, budget):
    d = mean.shape[0]
    s = int(state)
    tried = 0
    total = budget + 1
    last = None
    while tried < total:
        nb = min(_BLOCK, total - tried)
        u = _uniform_open_counters(s, nb * 2 * d).reshape(nb, d, 2)
        z = np.sqrt(-2.0 * np.log(u[:, :, 0])) * np.cos(_TWO_PI * u[:, :, 1])
        x = np.tile(mean, (nb, 1))
        for c in range(d):
            x += z[:, c][:, None] * chol[:, c][None, :]
        inside = ((x >= lo) & (x <= hi)).all(axis=1)
        hits = np.flatnonzero(inside)
        if hits.size:
            j = int(hits[0])
            return x[j].copy(), advance(s, (j + 1) * 2 * d), tried + j, 1
        s = advance(s, nb * 2 * d)
        tried += nb
        last = x[-1]
    return np.clip(last, lo, hi), s, budget + 1, 0


# ---------------------------------------------------------------------------
# simulate_chains: Monte Carlo for finite-state chains whose step kernels
# pick a row table by thresholding a statistic of the values seen so far.
# Statistic codes: 0 = last value, 1 = running max, 2 = running mean.


def _simulate_chains_loop(batch_seed, nu, fvals, stat_codes, thresholds, tables, M):
    n = stat_codes.shape[0]
    K = nu.shape[0]
    out = np.empty((M, n + 1), dtype=np.int64)
    for traj in range(M):
        s = (batch_seed ^ (_U64(traj) * _G)) + _G
        s = _mix(s)
        s = s + _G
        u = (_mix(s) >> _S11) * DOUBLE_UNIT
        acc = 0.0
        x = K - 1
        for j in range(K):
            acc += nu[j]
            if u < acc:
                x = j
                break
        out[traj, 0] = x
        v = fvals[x]
        vmax = v
        vsum = v
        for step in range(n):
            if stat_codes[step] == 0:
                stat = v
            elif stat_codes[step] == 1:
                stat = vmax
            else:
                stat = vsum / (step + 1)
            branch = 1 if stat > thresholds[step] else 0
            s = s + _G
            u = (_mix(s) >> _S11) * DOUBLE_UNIT
            acc = 0.0
            nxt = K - 1
            for j in range(K):
                acc += tables[step, branch, x, j]
                if u < acc:
                    nxt = j
                    break
            x = nxt
            out[traj, step + 1] = x
            v = fvals[x]
            if v > vmax:
                vmax = v
            vsum += v
    return out


def _simulate_chains_numpy(batch_seed, nu, fvals, stat_codes, thresholds, tables, M):
    batch_seed = int(batch_seed)
    n = stat_codes.shape[0]
    K = nu.shape[0]
    out = np.empty((M, n + 1), dtype=np.int64)
    idx = np.arange(M, dtype=np.uint64)
    states = _mix_array((_U64(batch_seed) ^ (idx * _G)) + _G)

    def draw(states):
        states = states + _G
        return states, (_mix_array(states) >> _S11).astype(np.float64) * DOUBLE_UNIT

    def categorical(rows, u):
        cum = np.cumsum(rows, axis=1)
        mask = u[:, None] < cum
        picked = mask.argmax(axis=1)
        return np.where(mask.any(axis=1), picked, K - 1)

    states, u = draw(states)
    x = categorical(np.tile(nu, (M, 1)), u)
    out[:, 0] = x
    v = fvals[x]
    vmax = v.copy()
    vsum = v.copy()
    for step in range(n):
        if stat_codes[step] == 0:
            stat = v
        elif stat_codes[step] == 1:
            stat = vmax
        else:
            stat = vsum / (step + 1)
        branch = (stat > thresholds[step]).astype(np.int64)
        states, u = draw(states)
        x = categorical(tables[step, branch, x], u)
        out[:, step + 1] = x
        v = fvals[x]
        vmax = np.maximum(vmax, v)
        vsum += v
    return out


# ---------------------------------------------------------------------------
# Dispatch. Loop variants get compiled once at import when numba is active;
# compilation itself is lazy (first call).

if USE_NUMBA:
    _jit = _njit(cache=True, nogil=True)
    _uniform_block_nb = _jit(_uniform_block_loop)
    _uniform_points_nb = _jit(_uniform_points_loop)
    _normal_block_nb = _jit(_normal_block_loop)
    _min_sqdist_nb = _jit(_min_sqdist_loop)
    _max_min_sqdist_nb = _jit(_max_min_sqdist_loop)
    _dispersion_exceeds_nb = _jit(_dispersion_exceeds_loop)
    _pairwise_max_slope_nb = _jit(_pairwise_max_slope_loop)
    _adalipo_rejection_nb = _jit(_adalipo_rejection_loop)
    _gaussian_box_rejection_nb = _jit(_gaussian_box_rejection_loop)
    _simulate_chains_nb = _jit(_simulate_chains_loop)


def uniform_block(state: int, count: int):
    """`count` doubles in [0, 1); returns (array, new_state)."""
    if USE_NUMBA:
        out, s = _uniform_block_nb(_U64(state), count)
        return out, int(s)
    return _uniform_block_numpy(state, count)


def uniform_points(state: int, m: int, lo: np.ndarray, hi: np.ndarray):
    """`m` uniform points in the box; returns ((m, d) array, new_state)."""
    if USE_NUMBA:
        out, s = _uniform_points_nb(_U64(state), m, lo, hi)
        return out, int(s)
    return _uniform_points_numpy(state, m, lo, hi)


def normal_block(state: int, count: int):
    """`count` standard normals; consumes 2*count draws."""
    if USE_NUMBA:
        out, s = _normal_block_nb(_U64(state), count)
        return out, int(s)
    return _normal_block_numpy(state, count)


def min_sqdist(points: np.ndarray, x: np.ndarray) -> float:
    """Smallest squared distance from x to any row of points."""
    if USE_NUMBA:
        return float(_min_sqdist_nb(points, x))
    return _min_sqdist_numpy(points, x)


def max_min_sqdist(points: np.ndarray, grid: np.ndarray) -> float:
    """max over grid rows of min over point rows of squared distance."""
    if USE_NUMBA:
        return float(_max_min_sqdist_nb(points, grid))
    return _max_min_sqdist_numpy(points, grid)


def dispersion_exceeds(points: np.ndarray, grid: np.ndarray, threshold: float) -> bool:
    """Whether some grid row lies farther than `threshold` from every point."""
    if threshold < 0.0:
        return grid.shape[0] > 0
    if USE_NUMBA:
        return bool(_dispersion_exceeds_nb(points, grid, threshold * threshold))
    return _dispersion_exceeds_numpy(points, grid, threshold * threshold)


def pairwise_max_slope(points: np.ndarray, values: np.ndarray) -> float:
    """max |v_i - v_j| / dist(p_i, p_j) over non-coincident pairs (0 if none)."""
    if USE_NUMBA:
        return float(_pairwise_max_slope_nb(points, values))
    return _pairwise_max_slope_numpy(points, values)


def adalipo_rejection(state, lo, hi, pts, vals, lip, budget):
    """Returns (point, new_state, rejections, accepted_flag)."""
    if USE_NUMBA:
        x, s, rej, acc = _adalipo_rejection_nb(
            _U64(state), lo, hi, pts, vals, lip, budget
        )
        return x, int(s), int(rej), int(acc)
    x, s, rej, acc = _adalipo_rejection_numpy(state, lo, hi, pts, vals, lip, budget)
    return x, int(s), int(rej), int(acc)


def gaussian_box_rejection(state, mean, chol, lo, hi, budget):
    """Returns (point, new_state, candidates_tried, inside_flag)."""
    if USE_NUMBA:
        x, s, tried, inside = _gaussian_box_rejection_nb(
            _U64(state), mean, chol, lo, hi, budget
        )
        return x, int(s), int(tried), int(inside)
    x, s, tried, inside = _gaussian_box_rejection_numpy(state, mean, chol, lo, hi, budget)
    return x, int(s), int(tried), int(inside)


def simulate_chains(batch_seed, nu, fvals, stat_codes, thresholds, tables, M):
    """Simulate M finite-chain trajectories; returns (M, n+1) state indices.

    Trajectory i consumes its own sub-stream derived from
    (batch_seed, i) exactly as rng.derive_stream does.
    """
    if USE_NUMBA:
        return _simulate_chains_nb(
            _U64(batch_seed), nu, fvals, stat_codes, thresholds, tables, M
        )
    return _simulate_chains_numpy(batch_seed, nu, fvals, stat_codes, thresholds, tables, M)


# Registry used by the cross-variant tests and the benchmark script.
VARIANTS = {
    "uniform_block": (_uniform_block_loop, _uniform_block_numpy),
    "uniform_points": (_uniform_points_loop, _uniform_points_numpy),
    "normal_block": (_normal_block_loop, _normal_block_numpy),
    "min_sqdist": (_min_sqdist_loop, _min_sqdist_numpy),
    "max_min_sqdist": (_max_min_sqdist_loop, _max_min_sqdist_numpy),
    "dispersion_exceeds": (_dispersion_exceeds_loop, _dispersion_exceeds_numpy),
    "pairwise_max_slope": (_pairwise_max_slope_loop, _pairwise_max_slope_numpy),
    "adalipo_rejection": (_adalipo_rejection_loop, _adalipo_rejection_numpy),
    "gaussian_box_rejection": (_gaussian_box_rejection_loop, _gaussian_box_rejection_numpy),
    "simulate_chains": (_simulate_chains_loop, _simulate_chains_numpy),
}

COMPILED = (
    {
        "uniform_block": _uniform_block_nb,
        "uniform_points": _uniform_points_nb,
        "normal_block": _normal_block_nb,
        "min_sqdist": _min_sqdist_nb,
        "max_min_sqdist": _max_min_sqdist_nb,
        "dispersion_exceeds": _dispersion_exceeds_nb,
        "pairwise_max_slope": _pairwise_max_slope_nb,
        "adalipo_rejection": _adalipo_rejection_nb,
        "gaussian_box_rejection": _gaussian_box_rejection_nb,
        "simulate_chains": _simulate_chains_nb,
    }
    if USE_NUMBA
    else {}
)
