"""Cross-variant parity for the hot kernels: compiled loops and vectorized
numpy must consume identical random draws and produce identical results."""

import numpy as np
import pytest

from kernelopt import _kernels, rng

needs_numba = pytest.mark.skipif(
    not _kernels.USE_NUMBA, reason="numba backend disabled or unavailable"
)


def _numpy_vs(name, *args, exact=True):
    compiled = _kernels.COMPILED[name]
    numpy_fn = _kernels.VARIANTS[name][1]
    a = compiled(*args)
    b = numpy_fn(*args)
    return a, b


def test_uniform_block_matches_scalar_stream():
    state = rng.derive_stream(3, 1)
    out, new_state = _kernels.uniform_block(state, 50)
    s = state
    expect = []
    for _ in range(50):
        s, u = rng.uniform(s)
        expect.append(u)
    assert out.tolist() == expect
    assert new_state == s


def test_normal_block_matches_scalar_stream():
    state = rng.derive_stream(3, 2)
    out, new_state = _kernels.normal_block(state, 25)
    s = state
    expect = []
    for _ in range(25):
        s, z = rng.normal(s)
        expect.append(z)
    assert np.allclose(out, expect, rtol=1e-12, atol=0.0)
    assert new_state == s


def test_uniform_points_scaling_and_state():
    lo = np.array([-1.0, 2.0])
    hi = np.array([1.0, 6.0])
    state = rng.derive_stream(4, 0)
    pts, new_state = _kernels.uniform_points(state, 10, lo, hi)
    assert pts.shape == (10, 2)
    assert ((pts >= lo) & (pts <= hi)).all()
    assert new_state == rng.advance(state, 20)
    flat, _ = _kernels.uniform_block(state, 20)
    assert np.array_equal(pts, lo + flat.reshape(10, 2) * (hi - lo))


def test_max_min_sqdist_against_bruteforce():
    rs = np.random.default_rng(0)
    for _ in range(20):
        m, g, d = rs.integers(1, 8), rs.integers(1, 40), rs.integers(1, 4)
        pts = rs.uniform(-1, 1, size=(m, d))
        grid = rs.uniform(-1, 1, size=(g, d))
        brute = ((grid[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2).min(axis=1).max()
        assert _kernels.max_min_sqdist(pts, grid) == pytest.approx(brute, rel=1e-15)


def test_dispersion_exceeds_consistent_with_max_min():
    rs = np.random.default_rng(1)
    for _ in range(20):
        pts = rs.uniform(0, 1, size=(6, 2))
        grid = rs.uniform(0, 1, size=(30, 2))
        worst = np.sqrt(_kernels.max_min_sqdist(pts, grid))
        assert _kernels.dispersion_exceeds(pts, grid, worst * 0.999)
        assert not _kernels.dispersion_exceeds(pts, grid, worst * 1.001)
    assert _kernels.dispersion_exceeds(pts, grid, -0.5)


def test_pairwise_max_slope_bruteforce_and_edges():
    rs = np.random.default_rng(2)
    pts = rs.uniform(0, 1, size=(12, 2))
    vals = rs.uniform(-1, 1, size=12)
    best = 0.0
    for i in range(12):
        for j in range(i + 1, 12):
            dist = np.linalg.norm(pts[i] - pts[j])
            if dist > 0:
                best = max(best, abs(vals[i] - vals[j]) / dist)
    assert _kernels.pairwise_max_slope(pts, vals) == pytest.approx(best, rel=1e-15)
    assert _kernels.pairwise_max_slope(pts[:1], vals[:1]) == 0.0
    same = np.tile(pts[0], (3, 1))
    assert _kernels.pairwise_max_slope(same, vals[:3]) == 0.0


def test_adalipo_rejection_contract():
    lo, hi = np.array([0.0]), np.array([1.0])
    pts = np.array([[0.0], [1.0]])
    vals = np.array([0.0, 1.0])
    state = rng.derive_stream(5, 0)
    x, new_state, rejections, accepted = _kernels.adalipo_rejection(
        state, lo, hi, pts, vals, 2.0, 10_000
    )
    assert accepted == 1
    # acceptance region for this history with slope 2 is {x >= 0.5}
    assert x[0] >= 0.5
    assert new_state == rng.advance(state, rejections + 1)


def test_adalipo_rejection_exhaustion_falls_back():
    lo, hi = np.array([0.0]), np.array([1.0])
    # slope-0 bound with spread values: acceptance region is empty
    pts = np.array([[0.2], [0.8]])
    vals = np.array([0.0, 1.0])
    state = rng.derive_stream(5, 1)
    x, new_state, rejections, accepted = _kernels.adalipo_rejection(
        state, lo, hi, pts, vals, 0.0, 37
    )
    assert accepted == 0
    assert rejections == 37
    assert 0.0 <= x[0] <= 1.0
    assert new_state == rng.advance(state, 38)


def test_gaussian_box_rejection_contains_and_advances():
    lo, hi = np.array([0.0, 0.0]), np.array([1.0, 1.0])
    mean = np.array([0.5, 0.5])
    chol = 0.2 * np.eye(2)
    state = rng.derive_stream(6, 0)
    x, new_state, tried, inside = _kernels.gaussian_box_rejection(
        state, mean, chol, lo, hi, 1000
    )
    assert inside == 1
    assert ((x >= lo) & (x <= hi)).all()
    assert new_state == rng.advance(state, (tried + 1) * 4)


def test_gaussian_box_rejection_clamps_after_budget():
    lo, hi = np.array([0.0]), np.array([1.0])
    mean = np.array([50.0])  # hopeless: every candidate lands far outside
    chol = np.eye(1) * 0.001
    state = rng.derive_stream(6, 1)
    x, _, tried, inside = _kernels.gaussian_box_rejection(state, mean, chol, lo, hi, 10)
    assert inside == 0
    assert tried == 11
    assert x[0] == 1.0  # clamped to the nearest face


def _reference_chain(batch_seed, nu, fvals, stats, thresholds, tables, M):
    """Pure-python reference simulator used as the oracle."""
    n = len(stats)
    K = nu.shape[0]
    out = np.empty((M, n + 1), dtype=np.int64)
    for i in range(M):
        s = rng.derive_stream(batch_seed, i)

        def categorical(row, s):
            s, u = rng.uniform(s)
            acc = 0.0
            for j in range(K):
                acc += row[j]
                if u < acc:
                    return j, s
            return K - 1, s

        x, s = categorical(nu, s)
        out[i, 0] = x
        v = fvals[x]
        vmax, vsum = v, v
        for step in range(n):
            stat = v if stats[step] == 0 else (vmax if stats[step] == 1 else vsum / (step + 1))
            branch = 1 if stat > thresholds[step] else 0
            x, s = categorical(tables[step, branch, x], s)
            out[i, step + 1] = x
            v = fvals[x]
            vmax = max(vmax, v)
            vsum += v
    return out


def test_simulate_chains_matches_reference():
    rs = np.random.default_rng(3)
    K, n, M = 3, 3, 200
    nu = rs.dirichlet(np.ones(K))
    fvals = rs.uniform(-1, 1, size=K)
    stats = np.array([0, 1, 2], dtype=np.int64)
    thresholds = rs.uniform(-1, 1, size=n)
    tables = rs.dirichlet(np.ones(K), size=(n, 2, K))
    got = _kernels.simulate_chains(77, nu, fvals, stats, thresholds, tables, M)
    expect = _reference_chain(77, nu, fvals, stats, thresholds, tables, M)
    assert np.array_equal(got, expect)


@needs_numba
@pytest.mark.parametrize(
    "name,args,exact",
    [
        ("uniform_block", lambda rs: (np.uint64(rng.derive_stream(10, 0)), 64), True),
        (
            "uniform_points",
            lambda rs: (
                np.uint64(rng.derive_stream(10, 1)),
                16,
                np.array([0.0, -1.0]),
                np.array([2.0, 1.0]),
            ),
            True,
        ),
        ("normal_block", lambda rs: (np.uint64(rng.derive_stream(10, 2)), 32), False),
        (
            "max_min_sqdist",
            lambda rs: (rs.uniform(0, 1, (7, 2)), rs.uniform(0, 1, (25, 2))),
            True,
        ),
        (
            "min_sqdist",
            lambda rs: (rs.uniform(0, 1, (7, 2)), rs.uniform(0, 1, 2)),
            True,
        ),
        (
            "dispersion_exceeds",
            lambda rs: (rs.uniform(0, 1, (7, 2)), rs.uniform(0, 1, (25, 2)), 0.04),
            True,
        ),
        (
            "pairwise_max_slope",
            lambda rs: (rs.uniform(0, 1, (9, 2)), rs.uniform(-1, 1, 9)),
            True,
        ),
        (
            "adalipo_rejection",
            lambda rs: (
                np.uint64(rng.derive_stream(10, 3)),
                np.array([0.0]),
                np.array([1.0]),
                rs.uniform(0, 1, (4, 1)),
                rs.uniform(-1, 0, 4),
                1.5,
                500,
            ),
            True,
        ),
        (
            "gaussian_box_rejection",
            lambda rs: (
                np.uint64(rng.derive_stream(10, 4)),
                np.array([0.5, 0.5]),
                0.3 * np.eye(2),
                np.array([0.0, 0.0]),
                np.array([1.0, 1.0]),
                200,
            ),
            False,
        ),
        (
            "simulate_chains",
            lambda rs: (
                np.uint64(99),
                rs.dirichlet(np.ones(3)),
                rs.uniform(-1, 1, 3),
                np.array([1, 2], dtype=np.int64),
                rs.uniform(-1, 1, 2),
                rs.dirichlet(np.ones(3), size=(2, 2, 3)),
                300,
            ),
            True,
        ),
    ],
)
def test_compiled_and_numpy_variants_agree(name, args, exact):
    rs = np.random.default_rng(11)
    a = _kernels.COMPILED[name](*args(rs))
    rs = np.random.default_rng(11)
    b = _kernels.VARIANTS[name][1](*args(rs))
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    assert len(a) == len(b)
    for left, right in zip(a, b):
        left = np.asarray(left)
        right = np.asarray(right)
        if exact or left.dtype.kind in "iub":
            assert np.array_equal(left, right)
        else:
            assert np.allclose(left, right, rtol=1e-12, atol=1e-15)
