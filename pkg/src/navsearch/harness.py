"""Experiment harness: builds instances, runs the estimators, recomputes
the structural bounds, and emits line-delimited result records."""
from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datafiles import load_dataset
from .demand import Demand, Distribution, entropy, marginals, max_entropy
from .instances import (
    HierarchicalSpec,
    build_hierarchical_space,
    line_space,
    random_instance,
    verify_lower_bound_instance,
)
from .learning import run_adaptive
from .measures import doubling_constant, doubling_constant_bruteforce
from .oracle import OracleConfig, TiePolicy
from .policy import (
    ExactRankPolicy,
    NonmetricPolicy,
    TargetOrder,
    UniformPolicy,
    all_normalizers,
    disorder_constant,
)
from .search import expected_search_cost
from .smallworld import GridSpec, expected_forwarding_cost, grid_space, validate_local_edges
from .space import MetricSpace, MetricError, validate_metric, validate_ultrametric

OUTPUT_DIR_ENV = "NAVSEARCH_OUT"


def rank_policy_cost_bound(c: float, h: float, hmax: float) -> float:
    """Upper envelope for expected cost under rank-proportional proposals:
    6 * c^3 * H * H_max (entropies in bits)."""
    return 6.0 * c ** 3 * h * hmax


def nonmetric_cost_bound(disorder: float, target_count: int) -> float:
    """Order-only envelope: 7 * D * log2(|T|)^2."""
    return 7.0 * disorder * math.log2(target_count) ** 2


@dataclass
class ExperimentConfig:
    instance: str                 # grid:AxB | line:0,1,3 | hier:DxK | random:n=..,dims=..,skew=.. | file:PATH
    policy: str = "exact"         # exact | uniform | nonmetric
    trials: int = 10_000
    seed: int = 0                 # mandatory master seed; no wall-clock seeding
    tie_policy: str = "probabilistic"
    p_first: float = 0.5
    epsilon: float = 0.1
    proximity: int | None = None  # batch width p, when set
    cap: int | None = None
    timeslots: int = 10_000
    resample_shortcuts: bool = True
    workers: int = 1
    output: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.seed is None:
            raise ValueError("a master seed is mandatory")

    def oracle_config(self) -> OracleConfig:
        return OracleConfig(tie_policy=TiePolicy(self.tie_policy),
                            p_first=self.p_first, rng_seed=self.seed)

    def echo(self) -> dict:
        return {
            "instance": self.instance,
            "policy": self.policy,
            "trials": self.trials,
            "seed": self.seed,
            "tie_policy": self.tie_policy,
            "p_first": self.p_first,
            "epsilon": self.epsilon,
            "proximity": self.proximity,
            "cap": self.cap,
            "timeslots": self.timeslots,
            "resample_shortcuts": self.resample_shortcuts,
        }


def parse_instance(spec: str):
    """Build (space, demand, local_edges_or_None, kind) from a spec string."""
    kind, _, arg = spec.partition(":")
    if kind == "grid":
        sides = tuple(int(s) for s in arg.split("x"))
        gspec = GridSpec(sides)
        space, local = grid_space(gspec)
        return space, Demand.uniform(space.n), local, gspec
    if kind == "line":
        space = line_space([float(v) for v in arg.split(",")])
        return space, Demand.uniform(space.n), None, None
    if kind == "hier":
        d, k = (int(v) for v in arg.split("x"))
        space, mu = build_hierarchical_space(HierarchicalSpec(d, k))
        return space, Demand.product(Distribution.uniform(space.n), mu), None, None
    if kind == "random":
        params = dict(kv.split("=") for kv in arg.split(","))
        space, demand = random_instance(
            int(params["n"]), int(params.get("dims", 2)),
            float(params.get("skew", 0.0)), int(params.get("seed", 0)))
        return space, demand, None, None
    if kind == "file":
        ds = load_dataset(arg)
        demand = ds.demand if ds.demand is not None else Demand.uniform(ds.space.n)
        return ds.space, demand, None, None
    raise ValueError(f"unknown instance spec {spec!r}")


@dataclass
class ResultRecord:
    command: str
    config: dict
    summary: dict
    structure: dict
    bound: float | None
    bound_ok: bool | None
    extra: dict = field(default_factory=dict)
    wall_time: float = 0.0  # human summary only; never serialized

    def to_json_line(self) -> str:
        doc = {
            "command": self.command,
            "config": self.config,
            "summary": self.summary,
            "structure": self.structure,
            "bound": self.bound,
            "bound_ok": self.bound_ok,
        }
        if self.extra:
            doc["extra"] = self.extra
        return json.dumps(doc, sort_keys=True)

    def table(self) -> str:
        rows = [("command", self.command)]
        rows += [(k, v) for k, v in self.structure.items()]
        rows += [(k, v) for k, v in self.summary.items() if not isinstance(v, dict)]
        if self.bound is not None:
            rows.append(("bound", self.bound))
            rows.append(("bound_ok", self.bound_ok))
        rows.append(("wall_time_s", round(self.wall_time, 3)))
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def output_path(config: ExperimentConfig, default_name: str) -> Path:
    if config.output:
        return Path(config.output)
    base = Path(os.environ.get(OUTPUT_DIR_ENV, "results"))
    base.mkdir(parents=True, exist_ok=True)
    return base / default_name


def write_record(record: ResultRecord, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a") as fh:
        fh.write(record.to_json_line() + "\n")


def _structure(space: MetricSpace, mu: Distribution) -> dict:
    c = doubling_constant(mu, space)
    return {
        "n": space.n,
        "doubling": c,
        "entropy_bits": entropy(mu),
        "max_entropy_bits": max_entropy(mu),
    }


def _build_policy(config: ExperimentConfig, space: MetricSpace, mu: Distribution):
    if config.policy == "exact":
        return ExactRankPolicy(space, mu)
    if config.policy == "uniform":
        return UniformPolicy(space.n)
    if config.policy == "nonmetric":
        return NonmetricPolicy(TargetOrder(space, mu.support.tolist()))
    raise ValueError(f"unknown policy {config.policy!r}")


def run_search_experiment(config: ExperimentConfig) -> ResultRecord:
    """Seeded search-cost run plus the matching structural bound check."""
    t0 = time.perf_counter()
    space, demand, _, _ = parse_instance(config.instance)
    _, mu = marginals(demand)
    policy = _build_policy(config, space, mu)
    summary = expected_search_cost(
        policy, config.oracle_config(), demand, config.trials, config.seed,
        space, cap=config.cap, mu=mu, p=config.proximity, workers=config.workers)
    structure = _structure(space, mu)
    if config.policy == "nonmetric":
        order = TargetOrder(space, mu.support.tolist())
        disorder = disorder_constant(order)
        structure["disorder"] = disorder
        bound = nonmetric_cost_bound(disorder, int(mu.support.size))
    else:
        bound = rank_policy_cost_bound(structure["doubling"],
                                       structure["entropy_bits"],
                                       structure["max_entropy_bits"])
        if config.proximity:
            bound /= config.proximity
    extra = {}
    if config.instance.startswith("hier:"):
        d, k = (int(v) for v in config.instance.split(":")[1].split("x"))
        report = verify_lower_bound_instance(HierarchicalSpec(d, k),
                                             config.trials, config.seed)
        extra["lower_bound"] = report.as_record()
    record = ResultRecord(
        command="search", config=config.echo(), summary=summary.as_record(),
        structure=structure, bound=bound, bound_ok=summary.mean <= bound,
        extra=extra, wall_time=time.perf_counter() - t0)
    return record


def run_forward_experiment(config: ExperimentConfig) -> ResultRecord:
    """Greedy-forwarding run over a grid instance with the same bound."""
    t0 = time.perf_counter()
    if not config.instance.startswith("grid:"):
        raise ValueError("forwarding experiments need a grid instance")
    sides = tuple(int(s) for s in config.instance.split(":")[1].split("x"))
    gspec = GridSpec(sides)
    space, _ = grid_space(gspec)
    demand = Demand.uniform(space.n)
    _, mu = marginals(demand)
    summary = expected_forwarding_cost(
        demand, gspec, config.trials, config.seed, mu=mu,
        oracle_cfg=config.oracle_config(), resample=config.resample_shortcuts)
    structure = _structure(space, mu)
    bound = rank_policy_cost_bound(structure["doubling"],
                                   structure["entropy_bits"],
                                   structure["max_entropy_bits"])
    ok = summary.mean <= bound and summary.mean <= summary.mean_distance
    record = ResultRecord(
        command="forward", config=config.echo(), summary=summary.as_record(),
        structure=structure, bound=bound, bound_ok=ok,
        wall_time=time.perf_counter() - t0)
    return record


def run_learn_experiment(config: ExperimentConfig) -> ResultRecord:
    """Adaptive-learning run; reports the trailing-window mean against the
    exploration-adjusted bound."""
    t0 = time.perf_counter()
    space, demand, _, _ = parse_instance(config.instance)
    if not demand.all_pairs_positive():
        raise ValueError("learning runs need demand on every ordered pair")
    run = run_adaptive(demand, config.epsilon, config.timeslots,
                       config.oracle_config(), config.seed, space)
    _, mu = marginals(demand)
    structure = _structure(space, mu)
    bound = rank_policy_cost_bound(structure["doubling"],
                                   structure["entropy_bits"],
                                   structure["max_entropy_bits"]) / (1 - config.epsilon)
    window = run.window_mean(0.1)
    k = max(1, config.timeslots // 100)
    trace = [float(run.costs[i:i + k].mean()) for i in range(0, len(run.costs), k)]
    record = ResultRecord(
        command="learn", config=config.echo(),
        summary={
            "timeslots": config.timeslots,
            "window_mean": window,
            "overall_mean": float(run.costs.mean()) if len(run.costs) else 0.0,
            "cap_exceeded": run.cap_exceeded,
        },
        structure=structure, bound=bound, bound_ok=window <= bound,
        extra={"trace": trace}, wall_time=time.perf_counter() - t0)
    return record


def run_verify(config: ExperimentConfig, local_radius: float | None = None) -> ResultRecord:
    """Structural suite: metric axioms, local-edge property, normalization
    bound sweep, doubling cross-check."""
    t0 = time.perf_counter()
    space, demand, local, gspec = parse_instance(config.instance)
    _, mu = marginals(demand)
    checks: dict[str, bool] = {}
    try:
        validate_metric(space)
        checks["metric_axioms"] = True
    except MetricError:
        checks["metric_axioms"] = False
    if space.kind == "hierarchical":
        try:
            validate_ultrametric(space)
            checks["ultrametric"] = True
        except MetricError:
            checks["ultrametric"] = False
    if local is None and local_radius is not None:
        local = []
        for x in range(space.n):
            row = space.distances_from(x)
            local.append([int(y) for y in np.flatnonzero(row <= local_radius) if y != x])
    if local is not None:
        checks["local_edges"] = validate_local_edges(space, local) is None
    z, z_bound = all_normalizers(mu, space)
    hmax = max_entropy(mu)
    checks["normalizer_bound"] = bool(
        np.all(z <= z_bound + 1e-9) and np.all(z_bound <= 3 * hmax + 1e-9))
    exact = doubling_constant(mu, space)
    dense = doubling_constant_bruteforce(mu, space)
    checks["doubling_cross_check"] = bool(abs(exact - dense) < 1e-12)
    record = ResultRecord(
        command="verify", config=config.echo(),
        summary={k: bool(v) for k, v in checks.items()},
        structure=_structure(space, mu),
        bound=None, bound_ok=all(checks.values()),
        wall_time=time.perf_counter() - t0)
    return record


def run_lowerbound(config: ExperimentConfig) -> ResultRecord:
    t0 = time.perf_counter()
    if not config.instance.startswith("hier:"):
        raise ValueError("lower-bound runs need a hier:DxK instance")
    d, k = (int(v) for v in config.instance.split(":")[1].split("x"))
    report = verify_lower_bound_instance(HierarchicalSpec(d, k),
                                         config.trials, config.seed)
    record = ResultRecord(
        command="lowerbound", config=config.echo(),
        summary=report.as_record(),
        structure={"n": d ** k, "doubling": report.doubling,
                   "entropy_bits": report.entropy_bits,
                   "max_entropy_bits": report.entropy_bits},
        bound=report.bound, bound_ok=report.ok,
        wall_time=time.perf_counter() - t0)
    return record
