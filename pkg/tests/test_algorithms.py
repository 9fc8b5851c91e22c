import numpy as np
import pytest

from kernelopt.algorithms import (
    AdaLipoParams,
    CmaLiteParams,
    adalipo,
    adalipo_acceptable,
    cma_lite,
    cma_lite_moments,
    estimate_lipschitz,
    halfspace_sampler,
    max_slope,
    random_search,
    snap_up_to_grid,
    stuck_hill_climber,
)
from kernelopt.core import History, run_trajectory
from kernelopt.objectives import piecewise_peak, reverse_ackley
from kernelopt.rng import derive_stream


def _draw_many(sampler, state, count):
    out = np.empty(count)
    for i in range(count):
        x, state = sampler.draw(state)
        out[i] = x[0]
    return out, state


class TestRandomSearch:
    def test_empirical_mean(self, unit_box):
        # CLT bound: 3*sigma/sqrt(M) with sigma = 1/sqrt(12) gives ~0.003;
        # the contract allows 0.01.
        alg = random_search(unit_box)
        draws, _ = _draw_many(alg.initial, derive_stream(0, 0), 100_000)
        assert abs(draws.mean() - 0.5) < 0.01
        assert draws.min() >= 0.0 and draws.max() <= 1.0

    def test_kernel_ignores_history(self, unit_box):
        alg = random_search(unit_box)
        h1 = History(np.array([[0.1]]), np.array([5.0]))
        h2 = History(np.array([[0.9], [0.2]]), np.array([-3.0, 0.0]))
        state = derive_stream(1, 1)
        a, _ = alg.kernel(0, h1).draw(state)
        b, _ = alg.kernel(7, h2).draw(state)
        assert np.array_equal(a, b)


class TestEstimateLipschitz:
    def test_unit_slope_snaps_to_one(self):
        h = History(np.array([[0.0], [1.0]]), np.array([0.0, 1.0]))
        assert estimate_lipschitz(h, 0.01) == 1.0

    def test_single_point_zero(self):
        h = History(np.array([[0.3]]), np.array([7.0]))
        assert estimate_lipschitz(h) == 0.0

    def test_slope_four_snaps_up(self):
        h = History(np.array([[0.0], [0.5]]), np.array([0.0, 2.0]))
        got = estimate_lipschitz(h, 0.01)
        assert got == pytest.approx(4.027099216733592, rel=1e-15)
        assert got == pytest.approx(1.01**140, rel=1e-15)
        assert got >= 4.0

    def test_snap_is_minimal_grid_element(self):
        rs = np.random.default_rng(0)
        for _ in range(200):
            value = float(rs.uniform(1e-3, 1e3))
            snapped = snap_up_to_grid(value, 0.01)
            assert snapped >= value
            assert snapped / 1.01 < value

    def test_raw_slope_permutation_invariant(self):
        rs = np.random.default_rng(1)
        pts = rs.uniform(0, 1, size=(10, 2))
        vals = rs.uniform(-1, 1, size=10)
        perm = rs.permutation(10)
        assert max_slope(pts, vals) == max_slope(pts[perm], vals[perm])

    def test_raw_slope_scale_covariant(self):
        rs = np.random.default_rng(2)
        pts = rs.uniform(0, 1, size=(8, 1))
        vals = rs.uniform(-1, 1, size=8)
        base = max_slope(pts, vals)
        assert max_slope(pts, 2.0 * vals) == 2.0 * base  # exact for powers of 2
        c = 3.7
        assert max_slope(pts, c * vals) == pytest.approx(c * base, rel=1e-12)


class TestAdaLipo:
    def test_acceptance_region_halfline(self):
        # history {0,1} with values {0,1} and slope bound 2: the acceptance
        # inequality min(2x, 1 + 2(1-x)) >= 1 reduces to x >= 0.5.
        pts = np.array([[0.0], [1.0]])
        vals = np.array([0.0, 1.0])
        for x in np.arange(0.0, 1.0001, 1e-3):
            expected = x >= 0.5
            assert adalipo_acceptable(np.array([x]), pts, vals, 2.0) == expected

    def test_single_point_history_nonempty_region(self):
        pts = np.array([[0.4]])
        vals = np.array([1.3])
        assert adalipo_acceptable(np.array([0.4]), pts, vals, 0.0)

    def test_accepted_samples_reverify(self, unit_box):
        alg = adalipo(unit_box, AdaLipoParams(pure_exploit=True))
        obj = piecewise_peak(unit_box, np.array([0.5]))
        state = derive_stream(4, 2)
        checked = 0
        for i in range(40):
            t = run_trajectory(alg, obj, 20, derive_stream(4, i))
            for k in range(1, 21):
                h = History(t.points[:k], t.values[:k])
                lip = estimate_lipschitz(h)
                x = t.points[k]
                if adalipo_acceptable(x, h.points, h.values, lip):
                    checked += 1
        # fallback draws are diagnosed, not silently accepted
        assert checked + alg.diagnostics.count == 40 * 20
        assert checked > 0

    def test_budget_exhaustion_counts_diagnostic(self, unit_box):
        alg = adalipo(unit_box, AdaLipoParams(pure_exploit=True, max_rejections=1))
        obj = piecewise_peak(unit_box, np.array([0.5]))
        run_trajectory(alg, obj, 30, derive_stream(6, 0))
        assert alg.diagnostics.count > 0

    def test_explore_prob_validation(self):
        with pytest.raises(ValueError):
            AdaLipoParams(explore_prob=0.0)
        with pytest.raises(ValueError):
            AdaLipoParams(explore_prob=1.5)
        AdaLipoParams(explore_prob=0.0, pure_exploit=True)  # documented escape

    def test_box_containment(self, unit_box):
        alg = adalipo(unit_box)
        obj = reverse_ackley(unit_box)
        for i in range(10):
            t = run_trajectory(alg, obj, 30, derive_stream(7, i))
            assert ((t.points >= 0.0) & (t.points <= 1.0)).all()


class TestCmaLite:
    def params(self, **kw):
        defaults = dict(mean0=np.array([0.5, 0.5]), sigma0=0.3)
        defaults.update(kw)
        return CmaLiteParams(**defaults)

    def test_moments_deterministic(self):
        rs = np.random.default_rng(3)
        h = History(rs.uniform(0, 1, (6, 2)), rs.uniform(-1, 1, 6))
        p = self.params()
        m1, c1 = cma_lite_moments(h, p)
        m2, c2 = cma_lite_moments(h, p)
        assert np.array_equal(m1, m2) and np.array_equal(c1, c2)

    def test_full_elite_unit_rate_gives_history_mean(self):
        rs = np.random.default_rng(4)
        pts = rs.uniform(0, 1, (5, 2))
        h = History(pts, rs.uniform(-1, 1, 5))
        p = self.params(elite_fraction=1.0, learning_rate_mean=1.0)
        mu, _ = cma_lite_moments(h, p)
        assert mu == pytest.approx(pts.mean(axis=0), rel=1e-12)

    def test_kernel_covariance_monte_carlo(self, unit_square):
        # interior mean, small spread: no clamping, so the sampled second
        # moment should land within 5% Frobenius error of the target.
        rs = np.random.default_rng(5)
        h = History(
            0.5 + 0.05 * rs.standard_normal((8, 2)), rs.uniform(-1, 1, 8)
        )
        p = self.params(sigma0=0.05)
        alg = cma_lite(unit_square, p)
        mu, cov = cma_lite_moments(h, p)
        sampler = alg.kernel(7, h)
        state = derive_stream(8, 0)
        draws = np.empty((100_000, 2))
        for i in range(draws.shape[0]):
            x, state = sampler.draw(state)
            draws[i] = x
        centered = draws - draws.mean(axis=0)
        emp = centered.T @ centered / draws.shape[0]
        rel = np.linalg.norm(emp - cov) / np.linalg.norm(cov)
        assert rel < 0.05

    def test_mean0_outside_box_rejected(self, unit_box):
        with pytest.raises(ValueError, match="mean0"):
            cma_lite(unit_box, CmaLiteParams(mean0=np.array([2.0]), sigma0=0.1))

    def test_containment(self, unit_square):
        alg = cma_lite(unit_square, self.params())
        obj = piecewise_peak(unit_square, np.array([0.25, 0.25]))
        t = run_trajectory(alg, obj, 25, derive_stream(9, 0))
        assert ((t.points >= 0.0) & (t.points <= 1.0)).all()


class TestHalfspace:
    def test_support_excludes_upper_half(self, unit_box):
        alg = halfspace_sampler(unit_box)
        draws, _ = _draw_many(alg.initial, derive_stream(10, 0), 100_000)
        assert draws.max() <= 0.5
        assert abs(draws.mean() - 0.25) < 0.01

    def test_min_distance_to_far_point_bounded(self, unit_box):
        alg = halfspace_sampler(unit_box)
        obj = piecewise_peak(unit_box, np.array([0.5]))
        for i in range(20):
            t = run_trajectory(alg, obj, 30, derive_stream(11, i))
            assert np.abs(t.points - 1.0).min() > 0.25


class TestStuckHillClimber:
    def test_incumbent_is_first_argmax(self, unit_box):
        alg = stuck_hill_climber(unit_box, 0.05)
        h = History(np.array([[0.2], [0.8], [0.5]]), np.array([1.0, 3.0, 3.0]))
        sampler = alg.kernel(2, h)
        # tie between indices 1 and 2 resolves to index 1
        draws, _ = _draw_many(sampler, derive_stream(12, 0), 2000)
        assert abs(np.median(draws) - 0.8) < 0.05

    def test_steps_stay_near_incumbent(self, unit_box):
        sigma = 0.01
        alg = stuck_hill_climber(unit_box, sigma)
        obj = piecewise_peak(unit_box, np.array([0.5]))
        within = 0
        total = 0
        for i in range(50):
            t = run_trajectory(alg, obj, 20, derive_stream(13, i))
            for k in range(1, 21):
                incumbent = t.points[:k][np.argmax(t.values[:k])]
                total += 1
                if abs(t.points[k, 0] - incumbent[0]) <= 3 * sigma:
                    within += 1
        assert within / total >= 0.99

    def test_containment(self, unit_box):
        alg = stuck_hill_climber(unit_box, 0.3)
        obj = piecewise_peak(unit_box, np.array([0.5]))
        t = run_trajectory(alg, obj, 50, derive_stream(14, 0))
        assert ((t.points >= 0.0) & (t.points <= 1.0)).all()


def test_all_algorithms_respect_box_on_many_draws(unit_square):
    obj = piecewise_peak(unit_square, np.array([0.5, 0.5]))
    algs = [
        random_search(unit_square),
        halfspace_sampler(unit_square),
        adalipo(unit_square),
        cma_lite(unit_square, CmaLiteParams(mean0=np.array([0.5, 0.5]), sigma0=0.4)),
        stuck_hill_climber(unit_square, 0.2),
    ]
    for alg in algs:
        for i in range(4):
            t = run_trajectory(alg, obj, 40, derive_stream(15, i))
            assert ((t.points >= 0.0) & (t.points <= 1.0)).all(), alg.name
