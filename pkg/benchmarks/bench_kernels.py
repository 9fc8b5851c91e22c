"""Benchmark the compiled (numba) kernel variants against the vectorized
numpy fallbacks.

Run:  python benchmarks/bench_kernels.py

Both variants consume identical random draws and return identical results
(the test suite asserts this); this script only measures speed. Setting
KERNELOPT_NO_NUMBA=1 switches the installed package to the numpy path; here
we time both variants explicitly in one process.
"""

import time

import numpy as np

from kernelopt import _kernels
from kernelopt.rng import derive_stream

N_REPEAT = 20


def bench(label, fn, args, repeat=N_REPEAT):
    fn(*args)  # warm-up (JIT compile for the numba variant)
    times = np.empty(repeat)
    for i in range(repeat):
        start = time.perf_counter()
        fn(*args)
        times[i] = time.perf_counter() - start
    return times.min()


def main():
    if not _kernels.USE_NUMBA:
        raise SystemExit(
            "numba backend unavailable (or disabled via KERNELOPT_NO_NUMBA); "
            "nothing to compare"
        )
    rs = np.random.default_rng(0)
    state = np.uint64(derive_stream(0, 0))

    pts = rs.uniform(0, 1, size=(201, 2))
    grid = rs.uniform(0, 1, size=(40_000, 2))
    vals = rs.uniform(-1, 1, size=201)
    hist_pts = rs.uniform(0, 1, size=(60, 1))
    hist_vals = -np.abs(hist_pts[:, 0] - 0.5)
    lo1, hi1 = np.array([0.0]), np.array([1.0])
    nu = rs.dirichlet(np.ones(4))
    fvals = rs.uniform(-1, 1, size=4)
    codes = np.array([0, 1, 2, 1], dtype=np.int64)
    thresholds = rs.uniform(-1, 1, size=4)
    tables = rs.dirichlet(np.ones(4), size=(4, 2, 4))

    cases = [
        ("uniform_block (1e6 draws)", "uniform_block", (state, 1_000_000)),
        ("normal_block (2e5 draws)", "normal_block", (state, 200_000)),
        ("max_min_sqdist (201 pts x 40k grid)", "max_min_sqdist", (pts, grid)),
        ("dispersion_exceeds (covered case)", "dispersion_exceeds", (pts, grid, 4.0)),
        ("pairwise_max_slope (201 pts)", "pairwise_max_slope", (pts, vals)),
        (
            "adalipo_rejection (60-pt history)",
            "adalipo_rejection",
            (state, lo1, hi1, hist_pts, hist_vals, 1.0, 100_000),
        ),
        (
            "simulate_chains (1e5 trajectories)",
            "simulate_chains",
            (np.uint64(7), nu, fvals, codes, thresholds, tables, 100_000),
        ),
    ]

    print(f"{'kernel':<38}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for label, name, args in cases:
        t_nb = bench(label, _kernels.COMPILED[name], args)
        t_np = bench(label, _kernels.VARIANTS[name][1], args)
        print(f"{label:<38}{t_nb * 1e3:>10.2f}ms{t_np * 1e3:>10.2f}ms{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
