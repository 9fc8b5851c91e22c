"""Exact finite-state oracle for the product-measure machinery.

On a finite space every subset is measurable and the law of (X_0..X_n) is a
dense tensor of K**(n+1) weights, built by the same recursion the sampler
follows: start from the initial vector, then multiply in one pulled-back
kernel row per step. This module computes those tensors exactly and checks,
at tolerance 1e-12, the structural facts the Monte Carlo path relies on:
mass conservation, marginalization consistency, monotonicity under
truncation, and equality of restricted laws for functions that agree on a
set. It is an oracle, not a production path: K <= 8 and horizon <= 6 are
enforced (8**7 is about two million weights).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from . import _kernels

MAX_STATES = 8
MAX_HORIZON = 6
EXACT_TOL = 1e-12

STAT_CODES = {"last": 0, "max": 1, "mean": 2}


class MarkovKernelError(ValueError):
    """A kernel produced a non-stochastic row."""


class HypothesisViolation(ValueError):
    """A checker was called with inputs that violate its hypothesis."""


@dataclass(frozen=True)
class DiscreteSpace:
    """Finite labeled point set with an explicit metric matrix."""

    labels: tuple[str, ...]
    metric: np.ndarray

    def __post_init__(self):
        labels = tuple(self.labels)
        metric = np.ascontiguousarray(self.metric, dtype=np.float64)
        K = len(labels)
        if K == 0 or K > 16:
            raise ValueError("discrete space needs 1..16 labels")
        if metric.shape != (K, K):
            raise ValueError("metric must be a KxK matrix")
        if (metric < 0).any():
            raise ValueError("metric entries must be nonnegative")
        if not np.array_equal(metric, metric.T):
            raise ValueError("metric must be symmetric")
        if (np.diag(metric) != 0).any():
            raise ValueError("metric diagonal must be zero")
        for i in range(K):
            for j in range(K):
                for k in range(K):
                    if metric[i, k] > metric[i, j] + metric[j, k] + EXACT_TOL:
                        raise ValueError(
                            f"triangle inequality fails at ({i},{j},{k})"
                        )
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "metric", metric)

    @property
    def size(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class DiscreteKernel:
    """Step kernel: (state tuple, value tuple) -> probability vector."""

    step: int
    transition: Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TupleMeasure:
    """Exact law of (X_0..X_n) as a dense tensor of shape (K,)*(n+1)."""

    horizon: int
    weights: np.ndarray
    tag: Optional[object] = None

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    def total(self) -> float:
        return float(self.weights.sum())

    def marginal(self, n: int) -> "TupleMeasure":
        """Law of the first n+1 coordinates: sum out the trailing axes."""
        if not 0 <= n <= self.horizon:
            raise ValueError("marginal horizon out of range")
        w = self.weights
        for _ in range(self.horizon - n):
            w = w.sum(axis=-1)
        return TupleMeasure(horizon=n, weights=w, tag=self.tag)


def _f_table(f, K: int) -> np.ndarray:
    if callable(f):
        return np.array([float(f(i)) for i in range(K)], dtype=np.float64)
    table = np.ascontiguousarray(f, dtype=np.float64)
    if table.shape != (K,):
        raise ValueError("objective table must have one value per state")
    return table


def _check_limits(K: int, n: int) -> None:
    if K > MAX_STATES or n > MAX_HORIZON:
        raise ValueError(
            f"oracle limits exceeded: need K <= {MAX_STATES} and horizon <= "
            f"{MAX_HORIZON}, got K={K}, horizon={n}"
        )


def _check_row(vec: np.ndarray, step: int, u) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    if (vec < 0).any() or abs(float(vec.sum()) - 1.0) > EXACT_TOL:
        raise MarkovKernelError(
            f"kernel at step {step} returned a non-stochastic row for history "
            f"{tuple(int(i) for i in u)}: entries sum to {float(vec.sum())!r}"
        )
    return vec


def pullback_kernel(kappa: DiscreteKernel, f) -> Callable[[np.ndarray], np.ndarray]:
    """Close the kernel over the objective: the value tuple is filled in
    from the state tuple, leaving a map on point histories alone."""

    def pulled(u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.int64)
        table = f if isinstance(f, np.ndarray) else None
        vals = table[u] if table is not None else np.array([float(f(i)) for i in u])
        return kappa.transition(u, vals)

    return pulled


def finite_product(
    nu: np.ndarray,
    kernels: Sequence[DiscreteKernel],
    f,
    n: int,
    tag: Optional[object] = None,
) -> TupleMeasure:
    """Exact n-horizon product law: P_0 = nu, then one kernel row per step.

    Every kernel row encountered is validated as a probability vector; a
    corrupted row raises MarkovKernelError naming the step and history.
    """
    nu = np.ascontiguousarray(nu, dtype=np.float64)
    K = nu.shape[0]
    _check_limits(K, n)
    if abs(float(nu.sum()) - 1.0) > 1e-9 or (nu < 0).any():
        raise ValueError("initial vector must be a probability distribution")
    if len(kernels) < n:
        raise ValueError(f"need {n} kernels for horizon {n}, got {len(kernels)}")
    fvals = _f_table(f, K)
    weights = nu.copy()
    for k in range(n):
        pulled = pullback_kernel(kernels[k], fvals)
        new = np.empty(weights.shape + (K,), dtype=np.float64)
        for u in np.ndindex(weights.shape):
            row = _check_row(pulled(np.array(u, dtype=np.int64)), k, u)
            new[u] = weights[u] * row
        weights = new
    return TupleMeasure(horizon=n, weights=weights, tag=tag)


def kernel_avg(mu: np.ndarray, kappa_rows) -> np.ndarray:
    """Average a kernel by a distribution: pi = sum_a mu[a] * row_a."""
    mu = np.ascontiguousarray(mu, dtype=np.float64)
    if abs(float(mu.sum()) - 1.0) > 1e-9 or (mu < 0).any():
        raise ValueError("mu must be a probability distribution")
    if isinstance(kappa_rows, dict):
        rows = np.stack([np.asarray(kappa_rows[a], dtype=np.float64) for a in range(mu.shape[0])])
    else:
        rows = np.ascontiguousarray(kappa_rows, dtype=np.float64)
    if rows.shape[0] != mu.shape[0]:
        raise ValueError("need one kernel row per state")
    return mu @ rows


MaskLike = Union[np.ndarray, Iterable[tuple]]


def _as_mask(sets: MaskLike, shape: tuple) -> np.ndarray:
    if isinstance(sets, np.ndarray) and sets.dtype == bool:
        if sets.shape != shape:
            raise ValueError(f"mask shape {sets.shape} does not match {shape}")
        return sets
    mask = np.zeros(shape, dtype=bool)
    for tup in sets:
        mask[tuple(int(i) for i in tup)] = True
    return mask


def continuation_mask(E: np.ndarray, m: int) -> np.ndarray:
    """All length-(m+1) tuples whose first coordinates fall in E."""
    n = E.ndim - 1
    if m < n:
        raise ValueError("continuation horizon must not shrink")
    K = E.shape[0]
    return np.broadcast_to(E.reshape(E.shape + (1,) * (m - n)), E.shape + (K,) * (m - n))


def check_truncation_monotone(
    P_n: TupleMeasure,
    P_m: TupleMeasure,
    E: MaskLike,
    B: MaskLike,
    tol: float = EXACT_TOL,
) -> bool:
    """Whether mass(B at horizon m) <= mass(E at horizon n) + tol.

    Requires every tuple of B to continue some tuple of E; violating that
    hypothesis raises HypothesisViolation rather than returning an answer.
    When both measures carry tags, the tags must match (same chain).
    """
    n, m = P_n.horizon, P_m.horizon
    if n > m:
        raise ValueError("P_n must be the shorter-horizon measure")
    if P_n.size != P_m.size:
        raise ValueError("measures live on different state spaces")
    if P_n.tag is not None and P_m.tag is not None and P_n.tag is not P_m.tag:
        raise ValueError("measures come from different chains (tag mismatch)")
    E_mask = _as_mask(E, P_n.weights.shape)
    B_mask = _as_mask(B, P_m.weights.shape)
    touched = B_mask.reshape(E_mask.size, -1).any(axis=1)
    if bool((touched & ~E_mask.reshape(-1)).any()):
        raise HypothesisViolation("B contains tuples whose prefix is outside E")
    return float(P_m.weights[B_mask].sum()) <= float(P_n.weights[E_mask].sum()) + tol


def check_restricted_equality(
    nu: np.ndarray,
    kernels: Sequence[DiscreteKernel],
    f,
    g,
    E: Iterable[int],
    n: int,
    tol: float = EXACT_TOL,
) -> bool:
    """Whether the two laws agree on every tuple drawn from E**(n+1).

    Requires f and g to agree exactly on E; they may differ arbitrarily
    elsewhere, which is the whole point — differences outside E cannot leak
    into the restricted law.
    """
    K = np.asarray(nu).shape[0]
    f_t = _f_table(f, K)
    g_t = _f_table(g, K)
    idx = sorted(int(i) for i in E)
    for i in idx:
        if not 0 <= i < K:
            raise ValueError(f"state {i} outside the space")
        if f_t[i] != g_t[i]:
            raise HypothesisViolation(f"f and g differ on E at state {i}")
    if not idx:
        return True
    P_f = finite_product(nu, kernels, f_t, n)
    P_g = finite_product(nu, kernels, g_t, n)
    gather = np.ix_(*([idx] * (n + 1)))
    diff = np.abs(P_f.weights[gather] - P_g.weights[gather])
    return float(diff.max()) <= tol


# ---------------------------------------------------------------------------
# Threshold-kernel scenarios: the configurable value-dependent kernel family
# (pick one of two row tables by thresholding a statistic of the values seen
# so far), shared by the exact oracle and the compiled chain simulator.


@dataclass(frozen=True)
class ThresholdKernel:
    stat: str  # "last" | "max" | "mean"
    threshold: float
    tables: np.ndarray  # (2, K, K): [branch, current state] -> row

    def __post_init__(self):
        if self.stat not in STAT_CODES:
            raise ValueError(f"stat must be one of {sorted(STAT_CODES)}")
        tables = np.ascontiguousarray(self.tables, dtype=np.float64)
        if tables.ndim != 3 or tables.shape[0] != 2 or tables.shape[1] != tables.shape[2]:
            raise ValueError("tables must have shape (2, K, K)")
        object.__setattr__(self, "tables", tables)

    def statistic(self, values: np.ndarray) -> float:
        # Sequential accumulation, mirroring the compiled simulator exactly.
        if self.stat == "last":
            return float(values[-1])
        if self.stat == "max":
            best = values[0]
            for v in values[1:]:
                if v > best:
                    best = v
            return float(best)
        acc = 0.0
        for v in values:
            acc += v
        return acc / values.shape[0]

    def as_kernel(self, step: int) -> DiscreteKernel:
        def transition(states, values):
            branch = 1 if self.statistic(values) > self.threshold else 0
            return self.tables[branch, int(states[-1])]

        return DiscreteKernel(step=step, transition=transition)


@dataclass(frozen=True)
class Scenario:
    space: DiscreteSpace
    nu: np.ndarray
    kernels: tuple[ThresholdKernel, ...]
    fvals: np.ndarray

    @property
    def K(self) -> int:
        return self.space.size

    @property
    def horizon(self) -> int:
        return len(self.kernels)

    def discrete_kernels(self) -> list[DiscreteKernel]:
        return [tk.as_kernel(k) for k, tk in enumerate(self.kernels)]

    def exact_law(self, n: Optional[int] = None, tag=None) -> TupleMeasure:
        n = self.horizon if n is None else n
        return finite_product(self.nu, self.discrete_kernels(), self.fvals, n, tag=tag)

    def simulate(self, M: int, seed: int) -> np.ndarray:
        """M Monte Carlo trajectories as an (M, horizon+1) index array."""
        codes = np.array([STAT_CODES[tk.stat] for tk in self.kernels], dtype=np.int64)
        thresholds = np.array([tk.threshold for tk in self.kernels], dtype=np.float64)
        tables = (
            np.stack([tk.tables for tk in self.kernels])
            if self.kernels
            else np.zeros((0, 2, self.K, self.K))
        )
        return _kernels.simulate_chains(
            seed, self.nu, self.fvals, codes, thresholds, tables, M
        )


def bundled_uniform_chain() -> Scenario:
    """Tiny built-in scenario: two states, uniform start, uniform kernels."""
    space = DiscreteSpace(("a", "b"), np.array([[0.0, 1.0], [1.0, 0.0]]))
    uniform = np.full((2, 2, 2), 0.5)
    kernels = tuple(
        ThresholdKernel(stat="last", threshold=0.5, tables=uniform) for _ in range(2)
    )
    return Scenario(
        space=space,
        nu=np.array([0.5, 0.5]),
        kernels=kernels,
        fvals=np.array([0.0, 1.0]),
    )


def random_scenario(rs: np.random.Generator, K: int, n: int) -> Scenario:
    """Random threshold-kernel scenario: metric from random planar points,
    strictly positive initial vector, value-dependent kernels."""
    _check_limits(K, n)
    planar = rs.uniform(0.0, 1.0, size=(K, 2))
    diff = planar[:, None, :] - planar[None, :, :]
    metric = np.sqrt((diff * diff).sum(axis=2))
    np.fill_diagonal(metric, 0.0)
    metric = 0.5 * (metric + metric.T)
    space = DiscreteSpace(tuple(f"s{i}" for i in range(K)), metric)
    nu = rs.uniform(0.05, 1.0, size=K)
    nu /= nu.sum()
    fvals = rs.uniform(-1.0, 1.0, size=K)
    kernels = []
    stats = sorted(STAT_CODES)
    for _ in range(n):
        tables = rs.uniform(0.05, 1.0, size=(2, K, K))
        tables /= tables.sum(axis=2, keepdims=True)
        kernels.append(
            ThresholdKernel(
                stat=stats[int(rs.integers(len(stats)))],
                threshold=float(rs.uniform(-1.0, 1.0)),
                tables=tables,
            )
        )
    return Scenario(space=space, nu=nu, kernels=tuple(kernels), fvals=fvals)


# ---------------------------------------------------------------------------
# Cylinder events: one allowed subset of states per coordinate.


def random_cylinder_event(rs: np.random.Generator, K: int, n: int) -> np.ndarray:
    """(n+1, K) boolean mask, every coordinate allowing a nonempty subset."""
    masks = rs.random((n + 1, K)) < 0.5
    for row in masks:
        if not row.any():
            row[int(rs.integers(K))] = True
    return masks


def exact_event_probability(measure: TupleMeasure, masks: np.ndarray) -> float:
    gather = np.ix_(*[np.flatnonzero(m) for m in masks])
    return float(measure.weights[gather].sum())


def empirical_event_count(tuples: np.ndarray, masks: np.ndarray) -> int:
    ok = np.ones(tuples.shape[0], dtype=bool)
    for k in range(tuples.shape[1]):
        ok &= masks[k][tuples[:, k]]
    return int(ok.sum())


# ---------------------------------------------------------------------------
# Randomized verification suites shared by the CLI oracle command and the
# acceptance tests. Each returns a list of failure descriptions (empty =
# all good) so callers can both count and report.


def _random_dims(rs: np.random.Generator, K_max: int, n_max: int) -> tuple[int, int]:
    return int(rs.integers(2, K_max + 1)), int(rs.integers(1, n_max + 1))


def mass_and_marginal_trials(
    trials: int, seed: int, K_max: int = 4, n_max: int = 4
) -> list[str]:
    """Total mass 1 within 1e-12 at every horizon, and summing out the
    trailing coordinates of the long law reproduces the short law."""
    rs = np.random.default_rng(seed)
    failures = []
    for t in range(trials):
        K, m = _random_dims(rs, K_max, n_max)
        sc = random_scenario(rs, K, m)
        law = sc.exact_law()
        if abs(law.total() - 1.0) > EXACT_TOL:
            failures.append(f"trial {t}: mass {law.total()!r} at horizon {m}")
            continue
        n = int(rs.integers(0, m + 1))
        short = sc.exact_law(n)
        gap = float(np.abs(law.marginal(n).weights - short.weights).max())
        if gap > EXACT_TOL:
            failures.append(f"trial {t}: marginal mismatch {gap!r} ({m}->{n})")
    return failures


def truncation_trials(
    trials: int, seed: int, K_max: int = 4, n_max: int = 4
) -> list[str]:
    """Random (E, B) pairs with B inside the continuation set of E: the long
    law never puts more mass on B than the short law puts on E, with
    equality when B is the full continuation set."""
    rs = np.random.default_rng(seed)
    failures = []
    for t in range(trials):
        K, m = _random_dims(rs, K_max, n_max)
        n = int(rs.integers(0, m + 1))
        sc = random_scenario(rs, K, m)
        tag = object()
        P_n = sc.exact_law(n, tag=tag)
        P_m = sc.exact_law(m, tag=tag)
        E = rs.random(P_n.weights.shape) < 0.5
        cont = continuation_mask(E, m)
        B = cont & (rs.random(P_m.weights.shape) < 0.7)
        try:
            if not check_truncation_monotone(P_n, P_m, E, B):
                failures.append(f"trial {t}: monotonicity failed (K={K}, {n}<={m})")
            full = float(P_m.weights[cont].sum())
            short = float(P_n.weights[E].sum())
            if abs(full - short) > EXACT_TOL:
                failures.append(
                    f"trial {t}: continuation mass {full!r} != prefix mass {short!r}"
                )
        except HypothesisViolation as exc:  # pragma: no cover - B built from cont
            failures.append(f"trial {t}: unexpected hypothesis violation: {exc}")
    return failures


def restricted_trials(
    trials: int, seed: int, K_max: int = 4, n_max: int = 4
) -> list[str]:
    """Random f, g equal on a random subset E of states: the two laws agree
    on E**(n+1) even though g is perturbed arbitrarily off E."""
    rs = np.random.default_rng(seed)
    failures = []
    for t in range(trials):
        K, n = _random_dims(rs, K_max, n_max)
        sc = random_scenario(rs, K, n)
        members = rs.random(K) < 0.6
        E = [int(i) for i in np.flatnonzero(members)]
        g = sc.fvals.copy()
        outside = np.flatnonzero(~members)
        g[outside] += rs.uniform(0.5, 2.0, size=outside.size)
        try:
            if not check_restricted_equality(
                sc.nu, sc.discrete_kernels(), sc.fvals, g, E, n
            ):
                failures.append(f"trial {t}: restricted laws differ on E^(n+1)")
        except HypothesisViolation as exc:  # pragma: no cover - g built equal on E
            failures.append(f"trial {t}: unexpected hypothesis violation: {exc}")
    return failures


def restricted_difference_demo() -> tuple[bool, bool]:
    """Three states, E = {0, 1}, f(2) != g(2), kernels that branch on the
    last value. Returns (restricted laws equal on E^(n+1), full laws differ
    somewhere off E^(n+1)) — both should be True, showing the equality
    check is not vacuous."""
    K, n = 3, 2
    metric = np.array(
        [[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]], dtype=np.float64
    )
    space = DiscreteSpace(("a", "b", "c"), metric)
    t0 = np.full((K, K), 1.0 / K)
    t1 = np.zeros((K, K))
    t1[:, 0] = 1.0
    kernels = tuple(
        ThresholdKernel(stat="last", threshold=0.5, tables=np.stack([t0, t1]))
        for _ in range(n)
    )
    nu = np.array([0.2, 0.2, 0.6])
    f = np.array([0.0, 0.0, 0.0])
    g = np.array([0.0, 0.0, 1.0])  # differs only on state 2
    sc = Scenario(space=space, nu=nu, kernels=kernels, fvals=f)
    equal_on_E = check_restricted_equality(nu, sc.discrete_kernels(), f, g, [0, 1], n)
    P_f = finite_product(nu, sc.discrete_kernels(), f, n)
    P_g = finite_product(nu, sc.discrete_kernels(), g, n)
    diff = np.abs(P_f.weights - P_g.weights)
    inner = np.ix_(*([[0, 1]] * (n + 1)))
    off_mask = np.ones_like(diff, dtype=bool)
    off_mask[inner] = False
    differs_off = float(diff[off_mask].max()) > 1e-6
    return equal_on_E, differs_off


def mc_agreement_trial(
    scenario: Scenario,
    M: int,
    seed: int,
    n_events: int,
    rs: np.random.Generator,
    cp_interval,
    confidence: float = 0.99,
) -> list[dict]:
    """Simulate once, then test `n_events` random cylinder events: is the
    exact probability inside the Clopper-Pearson interval of the empirical
    count? `cp_interval(successes, M, confidence)` is injected to keep this
    module free of the estimator implementation."""
    law = scenario.exact_law()
    tuples = scenario.simulate(M, seed)
    results = []
    for _ in range(n_events):
        masks = random_cylinder_event(rs, scenario.K, scenario.horizon)
        exact = exact_event_probability(law, masks)
        count = empirical_event_count(tuples, masks)
        lo, hi = cp_interval(count, M, confidence)
        results.append(
            {
                "exact": exact,
                "estimate": count / M,
                "ci_lo": lo,
                "ci_hi": hi,
                "inside": bool(lo <= exact <= hi),
            }
        )
    return results
