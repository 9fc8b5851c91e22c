"""kernelopt: stochastic iterative global optimizers modeled as an initial
sampler plus a sequence of history-reading Markov kernels, with Monte Carlo
tail-probability experiments, adversarial bump constructions, and an exact
finite-state oracle for the underlying product measures."""

from .algorithms import (
    AdaLipoParams,
    CmaLiteParams,
    adalipo,
    cma_lite,
    estimate_lipschitz,
    halfspace_sampler,
    random_search,
    stuck_hill_climber,
)
from .core import (
    AlgorithmDef,
    ContractViolation,
    History,
    Sampler,
    Trajectory,
    TrajectoryBatch,
    run_batch,
    run_trajectory,
)
from .metrics import (
    TailCurve,
    clopper_pearson,
    check_modus_ponens_inclusion,
    consistency_gap,
    find_starved_ball,
    max_min_dist,
    tail_curve,
)
from .objectives import Objective, f_tilde, piecewise_peak, reverse_ackley, sphere_max
from .rng import derive_stream
from .space import Box, Cover, build_cover, dist, probe_grid

__version__ = "0.1.0"

__all__ = [
    "AdaLipoParams",
    "AlgorithmDef",
    "Box",
    "CmaLiteParams",
    "ContractViolation",
    "Cover",
    "History",
    "Objective",
    "Sampler",
    "TailCurve",
    "Trajectory",
    "TrajectoryBatch",
    "adalipo",
    "build_cover",
    "check_modus_ponens_inclusion",
    "clopper_pearson",
    "cma_lite",
    "consistency_gap",
    "derive_stream",
    "dist",
    "estimate_lipschitz",
    "f_tilde",
    "find_starved_ball",
    "halfspace_sampler",
    "max_min_dist",
    "piecewise_peak",
    "probe_grid",
    "random_search",
    "reverse_ackley",
    "run_batch",
    "run_trajectory",
    "sphere_max",
    "stuck_hill_climber",
    "tail_curve",
]
