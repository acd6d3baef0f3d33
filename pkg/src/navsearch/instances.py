"""Instance generators: hierarchical lower-bound spaces, seeded random
point clouds with skewed demand, and small helper spaces."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .demand import Demand, Distribution, entropy
from .measures import doubling_constant
from .oracle import OracleConfig
from .policy import ExactRankPolicy
from .search import expected_search_cost
from .seeds import substream
from .space import MetricSpace


@dataclass(frozen=True)
class HierarchicalSpec:
    branching: int  # D >= 2
    depth: int      # K >= 1

    def __post_init__(self):
        if self.branching < 2 or self.depth < 1:
            raise ValueError("need branching >= 2 and depth >= 1")

    @property
    def n(self) -> int:
        return self.branching ** self.depth


def build_hierarchical_space(spec: HierarchicalSpec,
                             size_guard: int = 10**6) -> tuple[MetricSpace, Distribution]:
    """Ultrametric space of D-ary strings with uniform target mass.

    Distances double per level: two strings first differing at (1-based)
    coordinate j sit at distance 2**(K - j + 1).
    """
    space = MetricSpace.hierarchical(spec.branching, spec.depth, size_guard=size_guard)
    return space, Distribution.uniform(space.n)


@dataclass
class LowerBoundReport:
    spec: HierarchicalSpec
    doubling: float
    entropy_bits: float
    bound: float
    mean_cost: float
    stderr: float
    trials: int

    @property
    def doubling_matches(self) -> bool:
        return abs(self.doubling - self.spec.branching) < 1e-9

    @property
    def entropy_matches(self) -> bool:
        return abs(self.entropy_bits - self.spec.depth * math.log2(self.spec.branching)) < 1e-9

    @property
    def bound_respected(self) -> bool:
        return self.mean_cost >= self.bound - 3.0 * self.stderr

    @property
    def ok(self) -> bool:
        return self.doubling_matches and self.entropy_matches and self.bound_respected

    def as_record(self) -> dict:
        return {
            "branching": self.spec.branching,
            "depth": self.spec.depth,
            "doubling": self.doubling,
            "entropy_bits": self.entropy_bits,
            "lower_bound": self.bound,
            "mean_cost": self.mean_cost,
            "stderr": self.stderr,
            "trials": self.trials,
            "ok": self.ok,
        }


def verify_lower_bound_instance(spec: HierarchicalSpec, trials: int,
                                seed: int) -> LowerBoundReport:
    """Check the hierarchical instance against its structural floor.

    The doubling constant must equal the branching factor exactly, the
    entropy must equal depth * log2(branching) bits, and the measured
    mean search cost of the exact policy must clear depth*(branching-1)/2
    up to Monte-Carlo noise.
    """
    space, mu = build_hierarchical_space(spec)
    c = doubling_constant(mu, space)
    h = entropy(mu)
    bound = spec.depth * (spec.branching - 1) / 2.0
    policy = ExactRankPolicy(space, mu)
    demand = Demand.product(Distribution.uniform(space.n), mu)
    summary = expected_search_cost(policy, OracleConfig(), demand, trials,
                                   seed, space, mu=mu)
    return LowerBoundReport(spec, c, h, bound, summary.mean, summary.stderr, trials)


def random_instance(n: int, dims: int, demand_skew: float,
                    seed: int) -> tuple[MetricSpace, Demand]:
    """Seeded euclidean point cloud with a Zipf-skewed target marginal.

    Sources are uniform and the product demand has full support, so the
    instances also serve the adaptive-learning runs. Skew 0 gives a
    uniform target distribution; skew s gives mass ratios k**s between
    popularity ranks.
    """
    if n < 2:
        raise ValueError("need at least two objects")
    rng = substream(seed, "instance")
    coords = rng.random((n, dims))
    space = MetricSpace.from_points(coords, metric="euclidean")
    perm = rng.permutation(n)
    mu = Distribution.zipf(n, demand_skew, perm=perm)
    demand = Demand.product(Distribution.uniform(n), mu)
    return space, demand


def line_space(positions) -> MetricSpace:
    """1-D point cloud; handy for worked examples and tests."""
    return MetricSpace.from_points(np.asarray(positions, dtype=float)[:, None],
                                   metric="manhattan")
