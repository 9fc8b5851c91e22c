"""Experiment pipelines behind the CLI subcommands.

Every pipeline writes a human-readable report.txt next to machine-readable
CSVs. Outputs are pure functions of the config (floats serialized with
repr, no timestamps), so identical configs produce byte-identical files.
Exit-code policy: 0 for success including "phenomenon not observed",
1 for contract violations (a theorem-shaped check failed), 2 for usage and
config errors (raised as exceptions; the CLI maps them).
"""

from __future__ import annotations

import os

import numpy as np

from . import discrete
from .config import ExperimentConfig, build_algorithm, build_objective
from .metrics import (
    KINDS,
    batch_seed_for,
    clopper_pearson,
    check_modus_ponens_inclusion,
    find_starved_ball,
    tail_batches,
    tail_curve_from_batches,
)
from .objectives import f_tilde
from .space import build_cover
from .svgplot import svg_line_chart


def _write(path: str, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _out(out_dir: str, name: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def _plot_csv(curve) -> str:
    lines = ["n,estimate,ci_lo,ci_hi"]
    for e in curve.entries:
        lines.append(f"{e.n},{e.estimate!r},{e.ci_lo!r},{e.ci_hi!r}")
    return "\n".join(lines) + "\n"


def _build(cfg: ExperimentConfig):
    if cfg.box is None or cfg.algorithm is None or cfg.objective is None:
        raise ValueError("this mode requires [box], [algorithm] and [objective]")
    alg = build_algorithm(cfg.algorithm, cfg.box)
    obj = build_objective(cfg.objective, cfg.box)
    return alg, obj


def _config_echo(cfg: ExperimentConfig) -> list[str]:
    # No execution details (thread count, timing): outputs must be a pure
    # function of the experiment parameters.
    lines = [
        f"mode: {cfg.mode}",
        f"master_seed: {cfg.master_seed}",
        f"M: {cfg.M}",
        f"n_list: {cfg.n_list}",
    ]
    if cfg.box is not None:
        lines.append(f"box: lo={cfg.box.lo.tolist()} hi={cfg.box.hi.tolist()}")
    if cfg.algorithm is not None:
        lines.append(f"algorithm: {cfg.algorithm['name']}")
    if cfg.objective is not None:
        lines.append(f"objective: {cfg.objective['name']}")
    return lines


def run_tails(cfg: ExperimentConfig, out_dir: str) -> int:
    """Both tail curves (sampling + consistency) per epsilon, as CSV and
    plot data. The same per-horizon batches feed every curve."""
    alg, obj = _build(cfg)
    if not cfg.n_list:
        raise ValueError("tails mode requires a nonempty n_list")
    if not cfg.epsilons:
        raise ValueError("tails mode requires a nonempty epsilons list")
    batches = tail_batches(
        alg, obj, cfg.n_list, cfg.M, cfg.master_seed, cfg.threads, cfg.prefix_mode
    )
    report = ["tail curves", *_config_echo(cfg), ""]
    for eps in cfg.epsilons:
        for kind in KINDS:
            curve = tail_curve_from_batches(
                batches, obj, kind, eps, cfg.resolution, cfg.confidence
            )
            _write(_out(out_dir, f"tails_{kind}_{eps}.csv"), curve.to_csv())
            _write(_out(out_dir, f"plot_tails_{kind}_{eps}.csv"), _plot_csv(curve))
            if cfg.emit_svg:
                series = [
                    (kind, [e.n for e in curve.entries], [e.estimate for e in curve.entries])
                ]
                _write(
                    _out(out_dir, f"plot_tails_{kind}_{eps}.svg"),
                    svg_line_chart(f"P(statistic > {eps}) vs n", series),
                )
            final = curve.entries[-1]
            report.append(
                f"{kind} eps={eps}: final n={final.n} estimate={final.estimate!r} "
                f"ci=[{final.ci_lo!r}, {final.ci_hi!r}] M={final.M}"
            )
            if kind == "sampling":
                opt = curve.diagnostics["optimistic_estimates"]
                report.append(
                    f"  optimistic (no grid slack) estimates per n: "
                    f"{[opt[n] for n in sorted(opt)]}"
                )
    _write(_out(out_dir, "report.txt"), "\n".join(report) + "\n")
    return 0


def run_modus_ponens(cfg: ExperimentConfig, out_dir: str) -> int:
    """Inclusion-violation counts plus the paired tail curves showing the
    squeeze: the consistency tail at eps never exceeds the sampling tail at
    delta = eps / L beyond Monte Carlo noise."""
    alg, obj = _build(cfg)
    if not cfg.n_list or not cfg.epsilons:
        raise ValueError("modus_ponens mode requires n_list and epsilons")
    if obj.known_argmax is None:
        raise ValueError("modus_ponens mode needs an objective with a certified argmax")
    batches = tail_batches(
        alg, obj, cfg.n_list, cfg.M, cfg.master_seed, cfg.threads, cfg.prefix_mode
    )
    top = max(cfg.n_list)
    report = ["modus ponens inclusion", *_config_echo(cfg), ""]
    total_violations = 0
    for eps in cfg.epsilons:
        delta = eps / obj.lipschitz_L
        violations = check_modus_ponens_inclusion(batches[top], obj, eps, cfg.resolution)
        total_violations += violations
        report.append(f"eps={eps}: delta=eps/L={delta!r}, violations={violations}")
        cons = tail_curve_from_batches(
            batches, obj, "consistency", eps, cfg.resolution, cfg.confidence
        )
        samp = tail_curve_from_batches(
            batches, obj, "sampling", delta, cfg.resolution, cfg.confidence
        )
        rows = ["n,consistency,cons_ci_lo,cons_ci_hi,sampling,samp_ci_lo,samp_ci_hi,squeeze_ok"]
        for ce, se in zip(cons.entries, samp.entries):
            width = max(ce.ci_hi - ce.ci_lo, se.ci_hi - se.ci_lo)
            ok = ce.estimate <= se.estimate + 2.0 * width
            rows.append(
                f"{ce.n},{ce.estimate!r},{ce.ci_lo!r},{ce.ci_hi!r},"
                f"{se.estimate!r},{se.ci_lo!r},{se.ci_hi!r},{int(ok)}"
            )
            report.append(
                f"  n={ce.n}: consistency={ce.estimate!r} <= sampling={se.estimate!r} "
                f"+ 2*width -> {'ok' if ok else 'VIOLATED'}"
            )
        _write(_out(out_dir, f"plot_modus_ponens_{eps}.csv"), "\n".join(rows) + "\n")
    verdict = "all inclusions hold" if total_violations == 0 else "INCLUSION VIOLATED"
    report.append("")
    report.append(f"verdict: {verdict} (total violations {total_violations})")
    _write(_out(out_dir, "report.txt"), "\n".join(report) + "\n")
    return 0 if total_violations == 0 else 1


def _first_ball_entry(points: np.ndarray, center: np.ndarray, radius: float) -> int:
    """Index of the first point strictly inside the ball, or -1."""
    diff = points - center
    inside = (diff * diff).sum(axis=1) < radius * radius
    hits = np.flatnonzero(inside)
    return int(hits[0]) if hits.size else -1


def run_adversarial(cfg: ExperimentConfig, out_dir: str) -> int:
    """Full reverse-direction pipeline: find a ball the algorithm starves,
    plant a bump there, and measure the consistency tail on the bumped
    objective. Also confirms matched-seed trajectories on the base and
    bumped objectives coincide until first ball entry."""
    alg, obj = _build(cfg)
    if not cfg.n_list:
        raise ValueError("adversarial mode requires n_list")
    report = ["adversarial construction", *_config_echo(cfg), ""]
    top = max(cfg.n_list)
    base_batches = tail_batches(
        alg, obj, cfg.n_list, cfg.M, cfg.master_seed, cfg.threads, cfg.prefix_mode
    )
    cover = build_cover(cfg.box, cfg.eps1 / 2.0)
    report.append(f"cover: radius={cover.radius!r} centers={cover.count}")
    ball = find_starved_ball(base_batches[top], cover, cfg.eps2)
    if ball is None:
        report.append(
            "no starved ball found: algorithm appears to sample the space at "
            f"this scale (threshold {cfg.eps2 / (2 * cover.count)!r})"
        )
        _write(_out(out_dir, "report.txt"), "\n".join(report) + "\n")
        return 0
    report.append(
        f"starved ball: center={ball.center.tolist()} fraction={ball.fraction!r} "
        f"threshold={ball.threshold!r}"
    )
    adv = f_tilde(obj, ball.center, cfg.eps1)
    base_max = obj.known_max if obj.known_max is not None else adv.meta["base_max"]
    delta = adv.known_max - base_max
    eps_tail = delta / 2.0
    report.append(f"bumped objective: max gain delta={delta!r}, tail eps={eps_tail!r}")

    adv_batches = tail_batches(
        alg, adv, cfg.n_list, cfg.M, cfg.master_seed, cfg.threads, cfg.prefix_mode
    )
    matched = 0
    for t_base, t_adv in zip(
        base_batches[top].trajectories, adv_batches[top].trajectories
    ):
        entry = _first_ball_entry(t_base.points, ball.center, cover.radius)
        upto = t_base.points.shape[0] if entry < 0 else entry + 1
        if np.array_equal(t_base.points[:upto], t_adv.points[:upto]):
            matched += 1
    report.append(
        f"matched-seed coincidence up to first ball entry: {matched}/{cfg.M}"
    )

    curve = tail_curve_from_batches(
        adv_batches, adv, "consistency", eps_tail, cfg.resolution, cfg.confidence
    )
    _write(_out(out_dir, "tails_consistency_adversarial.csv"), curve.to_csv())
    _write(_out(out_dir, "plot_adversarial.csv"), _plot_csv(curve))
    if cfg.emit_svg:
        series = [
            ("consistency", [e.n for e in curve.entries], [e.estimate for e in curve.entries])
        ]
        _write(
            _out(out_dir, "plot_adversarial.svg"),
            svg_line_chart(f"consistency tail on bumped objective (eps={eps_tail:g})", series),
        )
    stuck = all(
        e.estimate >= ball.fraction - (e.ci_hi - e.ci_lo) for e in curve.entries
    )
    for e in curve.entries:
        report.append(
            f"  n={e.n}: estimate={e.estimate!r} ci=[{e.ci_lo!r}, {e.ci_hi!r}]"
        )
    report.append("")
    report.append(
        "verdict: consistency violated on the bumped objective"
        if stuck
        else "verdict: tail decayed; no violation observed at this scale"
    )
    _write(_out(out_dir, "report.txt"), "\n".join(report) + "\n")
    return 0


def run_oracle(cfg: ExperimentConfig, out_dir: str) -> int:
    """Exact-oracle verification suites; nonzero exit iff a check fails."""
    scenario = cfg.scenario if cfg.scenario is not None else discrete.bundled_uniform_chain()
    checks: list[tuple[str, bool, str]] = []

    law = scenario.exact_law()
    mass_gap = abs(law.total() - 1.0)
    checks.append(("mass_conservation", mass_gap <= discrete.EXACT_TOL, f"|1-total|={mass_gap!r}"))

    marg_ok = True
    worst = 0.0
    for n in range(scenario.horizon + 1):
        gap = float(
            np.abs(law.marginal(n).weights - scenario.exact_law(n).weights).max()
        )
        worst = max(worst, gap)
        marg_ok = marg_ok and gap <= discrete.EXACT_TOL
    checks.append(("marginalization", marg_ok, f"max gap {worst!r}"))

    if scenario.kernels:
        rows = scenario.kernels[0].tables[0]
        avg = discrete.kernel_avg(scenario.nu, rows)
        dirac = np.zeros(scenario.K)
        dirac[0] = 1.0
        avg_ok = (
            abs(float(avg.sum()) - 1.0) <= discrete.EXACT_TOL
            and np.allclose(discrete.kernel_avg(dirac, rows), rows[0], rtol=0, atol=0)
        )
        checks.append(("kernel_averaging", avg_ok, "distribution + point-mass identity"))

    if cfg.randomized > 0:
        fails = discrete.mass_and_marginal_trials(cfg.randomized, cfg.master_seed)
        checks.append(
            ("randomized_products", not fails, f"{cfg.randomized} trials, {len(fails)} failures")
        )
        fails = discrete.truncation_trials(cfg.randomized, cfg.master_seed + 1)
        checks.append(
            ("truncation_monotonicity", not fails, f"{cfg.randomized} trials, {len(fails)} failures")
        )
        fails = discrete.restricted_trials(cfg.randomized, cfg.master_seed + 2)
        checks.append(
            ("restricted_equality", not fails, f"{cfg.randomized} trials, {len(fails)} failures")
        )

    rs = np.random.default_rng(cfg.master_seed + 3)
    results = discrete.mc_agreement_trial(
        scenario, cfg.mc_trajectories, cfg.master_seed + 4, cfg.mc_events, rs, clopper_pearson
    )
    inside = sum(r["inside"] for r in results)
    checks.append(
        (
            "monte_carlo_agreement",
            inside >= len(results) - 1,
            f"{inside}/{len(results)} events inside their 99% interval",
        )
    )

    lines = ["oracle verification", *_config_echo(cfg), ""]
    failed = 0
    for name, ok, detail in checks:
        failed += 0 if ok else 1
        lines.append(f"[{'ok' if ok else 'FAIL'}] {name}: {detail}")
    lines.append("")
    lines.append(f"checks failed: {failed}")
    _write(_out(out_dir, "report.txt"), "\n".join(lines) + "\n")
    return 0 if failed == 0 else 1


def run_cover(cfg: ExperimentConfig, out_dir: str) -> int:
    if cfg.box is None:
        raise ValueError("cover mode requires [box]")
    radius = cfg.radius if cfg.radius is not None else cfg.eps1 / 2.0
    cover = build_cover(cfg.box, radius)
    d = cfg.box.dim
    rows = ["index," + ",".join(f"c_{k}" for k in range(d))]
    for i, center in enumerate(cover.centers):
        rows.append(f"{i}," + ",".join(repr(float(v)) for v in center))
    _write(_out(out_dir, "cover.csv"), "\n".join(rows) + "\n")
    lines = [
        "ball cover",
        *_config_echo(cfg),
        "",
        f"radius: {cover.radius!r}",
        f"centers: {cover.count}",
        f"validation: closed balls on a lattice of spacing {(radius / 8.0)!r}",
    ]
    _write(_out(out_dir, "report.txt"), "\n".join(lines) + "\n")
    return 0


RUNNERS = {
    "tails": run_tails,
    "adversarial": run_adversarial,
    "oracle": run_oracle,
    "modus_ponens": run_modus_ponens,
    "cover": run_cover,
}
