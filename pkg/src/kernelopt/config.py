"""TOML experiment configs: one experiment per file, nested tables for
algorithm/objective parameters, reviewable and diffable."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from . import algorithms, objectives
from .discrete import DiscreteSpace, Scenario, ThresholdKernel
from .space import Box

MODES = ("tails", "adversarial", "oracle", "modus_ponens", "cover")

ALGORITHMS = ("random_search", "adalipo", "cma_lite", "halfspace", "stuck_hill")

_F_TILDE_RE = re.compile(r"^f_tilde\((\w+)\)$")


class ConfigError(ValueError):
    """Config file is syntactically or semantically invalid."""


@dataclass
class ExperimentConfig:
    mode: str
    master_seed: int = 0
    M: int = 100
    n_list: list[int] = field(default_factory=list)
    epsilons: list[float] = field(default_factory=list)
    resolution: float = 0.01
    threads: int = 1
    prefix_mode: bool = False
    emit_svg: bool = False
    confidence: float = 0.95
    box: Optional[Box] = None
    algorithm: Optional[dict] = None
    objective: Optional[dict] = None
    # adversarial
    eps1: float = 0.5
    eps2: float = 0.5
    # cover
    radius: Optional[float] = None
    # oracle
    randomized: int = 0
    mc_events: int = 50
    mc_trajectories: int = 100_000
    scenario: Optional[Scenario] = None


def _require(data: dict, key: str, kind, ctx: str):
    if key not in data:
        raise ConfigError(f"{ctx}: missing required field '{key}'")
    value = data[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigError(f"{ctx}: field '{key}' must be {kind.__name__}")
    return value


def _parse_box(data: dict, ctx: str) -> Box:
    lo = _require(data, "lo", list, ctx)
    hi = _require(data, "hi", list, ctx)
    try:
        return Box(np.asarray(lo, dtype=np.float64), np.asarray(hi, dtype=np.float64))
    except ValueError as exc:
        raise ConfigError(f"{ctx}: {exc}") from exc


def _parse_scenario(data: dict, ctx: str) -> Scenario:
    labels = tuple(_require(data, "labels", list, ctx))
    metric = np.asarray(_require(data, "metric", list, ctx), dtype=np.float64)
    nu = np.asarray(_require(data, "nu", list, ctx), dtype=np.float64)
    fvals = np.asarray(_require(data, "fvals", list, ctx), dtype=np.float64)
    kernels = []
    for i, kdata in enumerate(data.get("kernels", [])):
        kctx = f"{ctx}.kernels[{i}]"
        kernels.append(
            ThresholdKernel(
                stat=_require(kdata, "stat", str, kctx),
                threshold=_require(kdata, "threshold", float, kctx),
                tables=np.asarray(_require(kdata, "tables", list, kctx), dtype=np.float64),
            )
        )
    try:
        space = DiscreteSpace(labels, metric)
        return Scenario(space=space, nu=nu, kernels=tuple(kernels), fvals=fvals)
    except ValueError as exc:
        raise ConfigError(f"{ctx}: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: TOML parse error: {exc}") from exc
    return config_from_dict(data, str(path))


def config_from_dict(data: dict, ctx: str = "config") -> ExperimentConfig:
    mode = _require(data, "mode", str, ctx)
    if mode not in MODES:
        raise ConfigError(f"{ctx}: mode must be one of {MODES}, got '{mode}'")
    cfg = ExperimentConfig(mode=mode)
    simple = {
        "master_seed": int,
        "M": int,
        "threads": int,
        "randomized": int,
        "mc_events": int,
        "mc_trajectories": int,
        "resolution": float,
        "confidence": float,
        "eps1": float,
        "eps2": float,
        "radius": float,
        "prefix_mode": bool,
        "emit_svg": bool,
    }
    for key, kind in simple.items():
        if key in data:
            setattr(cfg, key, _require(data, key, kind, ctx))
    if "n_list" in data:
        cfg.n_list = [int(n) for n in _require(data, "n_list", list, ctx)]
        if any(b <= a for a, b in zip(cfg.n_list, cfg.n_list[1:])):
            raise ConfigError(f"{ctx}: n_list must be strictly increasing")
    if "epsilons" in data:
        cfg.epsilons = [float(e) for e in _require(data, "epsilons", list, ctx)]
        if any(e <= 0 for e in cfg.epsilons):
            raise ConfigError(f"{ctx}: epsilons must be positive")
    if cfg.M < 1:
        raise ConfigError(f"{ctx}: M must be >= 1")
    if "box" in data:
        cfg.box = _parse_box(data["box"], f"{ctx}.box")
    if "algorithm" in data:
        cfg.algorithm = data["algorithm"]
        name = _require(cfg.algorithm, "name", str, f"{ctx}.algorithm")
        if name not in ALGORITHMS:
            raise ConfigError(
                f"{ctx}.algorithm: name must be one of {ALGORITHMS}, got '{name}'"
            )
    if "objective" in data:
        cfg.objective = data["objective"]
        _require(cfg.objective, "name", str, f"{ctx}.objective")
    if "scenario" in data:
        cfg.scenario = _parse_scenario(data["scenario"], f"{ctx}.scenario")
    return cfg


def build_algorithm(spec: dict, box: Box):
    name = spec["name"]
    params: dict[str, Any] = dict(spec.get("params", {}))
    if name == "random_search":
        return algorithms.random_search(box)
    if name == "halfspace":
        return algorithms.halfspace_sampler(box)
    if name == "adalipo":
        return algorithms.adalipo(box, algorithms.AdaLipoParams(**params))
    if name == "stuck_hill":
        return algorithms.stuck_hill_climber(box, **params)
    if name == "cma_lite":
        if "mean0" in params:
            params["mean0"] = np.asarray(params["mean0"], dtype=np.float64)
        else:
            params["mean0"] = box.center
        return algorithms.cma_lite(box, algorithms.CmaLiteParams(**params))
    raise ConfigError(f"unknown algorithm '{name}'")


def _build_base_objective(name: str, params: dict, box: Box):
    if name == "reverse_ackley":
        return objectives.reverse_ackley(box)
    if name == "sphere":
        return objectives.sphere_max(box)
    if name == "piecewise_peak":
        peak = np.asarray(params.get("peak", box.center), dtype=np.float64)
        return objectives.piecewise_peak(box, peak)
    raise ConfigError(f"unknown objective '{name}'")


def build_objective(spec: dict, box: Box):
    name = spec["name"]
    params = dict(spec.get("params", {}))
    match = _F_TILDE_RE.match(name)
    if match:
        base = _build_base_objective(match.group(1), params, box)
        if "c" not in params:
            raise ConfigError("f_tilde objective requires params.c")
        return objectives.f_tilde(
            base,
            np.asarray(params["c"], dtype=np.float64),
            eps1=float(params.get("eps1", 0.5)),
            factor=float(params.get("factor", 2.0)),
            offset=float(params.get("offset", 1.0)),
        )
    return _build_base_objective(name, params, box)
