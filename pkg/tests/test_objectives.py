import math

import numpy as np
import pytest

from kernelopt.objectives import f_tilde, piecewise_peak, reverse_ackley, sphere_max
from kernelopt.space import Box, dist, probe_grid


def _ackley_reference(x, d):
    """Independent scalar evaluation of the standard Ackley function."""
    a, b, c = 20.0, 0.2, 2.0 * math.pi
    s = sum(v * v for v in x)
    return (
        -a * math.exp(-b * math.sqrt(s / d))
        - math.exp(sum(math.cos(c * v) for v in x) / d)
        + a
        + math.e
    )


def _pair_slopes(obj, n_pairs, seed):
    rs = np.random.default_rng(seed)
    box = obj.domain
    a = rs.uniform(box.lo, box.hi, size=(n_pairs, box.dim))
    b = rs.uniform(box.lo, box.hi, size=(n_pairs, box.dim))
    d = np.sqrt(((a - b) ** 2).sum(axis=1))
    keep = d > 0
    return np.abs(obj.eval_batch(a) - obj.eval_batch(b))[keep] / d[keep]


def _check_known_max(obj):
    assert obj.eval(obj.known_argmax) == pytest.approx(obj.known_max, abs=1e-12)
    grid = probe_grid(obj.domain, float(obj.domain.sides.max()) / 64)
    assert (obj.eval_batch(grid) <= obj.known_max + 1e-9).all()


class TestReverseAckley:
    def test_origin_is_max(self, sym_box):
        obj = reverse_ackley(sym_box)
        assert obj.eval(np.array([0.0])) == pytest.approx(0.0, abs=1e-12)
        assert obj.known_max == 0.0

    def test_value_at_ones(self):
        box = Box(np.array([-2.0, -2.0]), np.array([2.0, 2.0]))
        obj = reverse_ackley(box)
        x = np.array([1.0, 1.0])
        assert obj.eval(x) == pytest.approx(-_ackley_reference(x, 2), rel=1e-12)
        assert obj.eval(x) == pytest.approx(-3.6253849384403627, rel=1e-10)

    def test_even_symmetry(self, sym_box):
        obj = reverse_ackley(sym_box)
        rs = np.random.default_rng(0)
        xs = rs.uniform(-2, 2, size=(100, 1))
        assert np.array_equal(obj.eval_batch(xs), obj.eval_batch(-xs))

    def test_lipschitz_property(self, sym_box):
        obj = reverse_ackley(sym_box)
        slopes = _pair_slopes(obj, 10_000, seed=1)
        assert slopes.max() <= obj.lipschitz_L

    def test_known_max_invariants(self, sym_box):
        _check_known_max(reverse_ackley(sym_box))

    def test_no_known_max_off_origin(self):
        box = Box(np.array([1.0]), np.array([2.0]))
        assert reverse_ackley(box).known_max is None


class TestSphereMax:
    def test_values(self, unit_box):
        obj = sphere_max(unit_box)
        assert obj.eval(np.array([0.0])) == -0.25
        assert obj.eval(np.array([0.5])) == 0.0
        assert obj.known_min == -0.25

    def test_lipschitz_property(self, unit_box):
        obj = sphere_max(unit_box)
        slopes = _pair_slopes(obj, 10_000, seed=2)
        assert slopes.max() <= obj.lipschitz_L
        # the certified constant is deliberately loose (2x the tight bound)
        assert obj.lipschitz_L == 2.0 * unit_box.diameter

    def test_known_max_invariants(self, unit_box):
        _check_known_max(sphere_max(unit_box))


class TestPiecewisePeak:
    def test_peak_value(self, unit_box):
        obj = piecewise_peak(unit_box, np.array([0.5]))
        assert obj.eval(np.array([0.5])) == 0.0
        assert obj.known_min == -0.5

    def test_tight_along_rays(self, unit_square):
        peak = np.array([0.5, 0.5])
        obj = piecewise_peak(unit_square, peak)
        a = np.array([0.6, 0.5])
        b = np.array([0.9, 0.5])
        assert abs(obj.eval(a) - obj.eval(b)) == pytest.approx(dist(a, b), rel=1e-15)

    def test_triangle_bound(self, unit_square):
        obj = piecewise_peak(unit_square, np.array([0.3, 0.8]))
        slopes = _pair_slopes(obj, 10_000, seed=3)
        assert slopes.max() <= 1.0 + 1e-12

    def test_peak_outside_rejected(self, unit_box):
        with pytest.raises(ValueError, match="peak"):
            piecewise_peak(unit_box, np.array([1.5]))

    def test_known_max_invariants(self, unit_square):
        _check_known_max(piecewise_peak(unit_square, np.array([0.25, 0.75])))


class TestFTilde:
    def setup_method(self):
        self.box = Box(np.array([0.0]), np.array([1.0]))
        self.base = piecewise_peak(self.box, np.array([0.25]))
        self.c = np.array([0.75])
        self.eps1 = 0.5
        self.obj = f_tilde(self.base, self.c, self.eps1)

    def test_value_at_center(self):
        # fmax=0, fmin=-0.75: bump height 2*(0.75+1) = 3.5 on top of f(c)=-0.5
        assert self.obj.eval(self.c) == pytest.approx(-0.5 + 3.5, abs=1e-12)
        assert self.obj.known_max == pytest.approx(3.0, abs=1e-12)
        assert np.array_equal(self.obj.known_argmax, self.c)

    def test_agreement_outside_ball_bit_equal(self):
        rs = np.random.default_rng(4)
        xs = rs.uniform(0, 1, size=(20_000, 1))
        outside = np.abs(xs[:, 0] - 0.75) >= self.eps1 / 2
        got = self.obj.eval_batch(xs[outside])
        want = self.base.eval_batch(xs[outside])
        assert np.array_equal(got, want)
        assert outside.sum() >= 10_000

    def test_boundary_continuity_bound(self):
        height = 2.0 * (0.75 + 1.0)
        rs = np.random.default_rng(5)
        xs = rs.uniform(0.5, 1.0, size=(5000, 1))
        d = np.abs(xs[:, 0] - 0.75)
        inside = d < self.eps1 / 2
        diff = self.obj.eval_batch(xs[inside]) - self.base.eval_batch(xs[inside])
        bound = height * (1.0 - d[inside] / (self.eps1 / 2))
        assert np.allclose(diff, bound, rtol=0, atol=1e-12)

    def test_strictly_larger_max(self):
        fmax, fmin = 0.0, -0.75
        assert self.obj.eval(self.c) - fmax >= fmax - fmin + 2.0 - 1e-12

    def test_lipschitz_bound(self):
        expected = self.base.lipschitz_L + 4.0 * (0.75 + 1.0) / self.eps1
        assert self.obj.lipschitz_L == pytest.approx(expected, rel=1e-15)
        slopes = _pair_slopes(self.obj, 100_000, seed=6)
        assert slopes.max() <= self.obj.lipschitz_L + 1e-9

    def test_factor3_variant(self):
        older = f_tilde(self.base, self.c, self.eps1, factor=3.0, offset=0.0)
        assert older.eval(self.c) == pytest.approx(-0.5 + 3.0 * 0.75, abs=1e-12)

    def test_center_outside_domain_rejected(self):
        with pytest.raises(ValueError, match="center"):
            f_tilde(self.base, np.array([1.5]), 0.5)

    def test_grid_range_fallback(self, sym_box):
        # reverse_ackley has no known_min: the range bracket comes from a
        # lattice widened by the Lipschitz cell bound, and strictness of the
        # new max must survive that approximation.
        base = reverse_ackley(sym_box)
        obj = f_tilde(base, np.array([1.0]), 0.5)
        assert obj.known_max is not None
        assert obj.known_max > 0.0
        assert obj.meta["base_min"] <= base.eval_batch(probe_grid(sym_box, 0.01)).min()
        gap = obj.known_max - 0.0
        est_range = obj.meta["base_max"] - obj.meta["base_min"]
        assert gap >= est_range + 2.0 - 1e-9

    def test_known_max_invariants(self):
        _check_known_max(self.obj)
