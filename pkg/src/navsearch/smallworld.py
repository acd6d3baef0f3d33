"""Navigable graphs: lattice local edges, one sampled shortcut per node,
and greedy forwarding driven by the comparison oracle."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .demand import Demand, Distribution
from .measures import RankTable
from .oracle import ComparisonOracle, OracleConfig
from .policy import ExactRankPolicy, NoCandidateError
from .search import SearchOutcome, Terminated, _Welford, PhaseTracker
from .seeds import substream
from .space import MetricSpace, ObjectId


class GraphIntegrityError(RuntimeError):
    """Forwarding ran out of progress; the local edges cannot satisfy the
    always-closer-neighbor property."""


@dataclass(frozen=True)
class GridSpec:
    """Rectangular lattice with manhattan metric and radius-r local edges."""

    sides: tuple[int, ...]
    radius: int = 1

    def __post_init__(self):
        if not self.sides or any(s < 2 for s in self.sides):
            raise ValueError("every side must be at least 2")
        if self.radius < 1:
            raise ValueError("locality radius must be at least 1")

    @property
    def dims(self) -> int:
        return len(self.sides)

    @property
    def n(self) -> int:
        out = 1
        for s in self.sides:
            out *= s
        return out


def grid_space(spec: GridSpec) -> tuple[MetricSpace, list[list[int]]]:
    """Full lattice plus the local edges of all pairs within the radius.

    On a gapless grid these edges guarantee that any node has a strictly
    closer neighbor toward any target.
    """
    grids = np.meshgrid(*[np.arange(s) for s in spec.sides], indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1).astype(float)
    space = MetricSpace.from_points(coords, metric="manhattan")
    n = spec.n
    local: list[list[int]] = [[] for _ in range(n)]
    # enumerate integer offsets with |offset|_1 <= radius
    offsets = [()]
    for _ in range(spec.dims):
        offsets = [(*o, d) for o in offsets
                   for d in range(-spec.radius, spec.radius + 1)]
    offsets = [o for o in offsets if 0 < sum(abs(d) for d in o) <= spec.radius]
    strides = np.cumprod([1, *spec.sides[::-1]])[:-1][::-1]
    pos = coords.astype(int)
    for off in offsets:
        nb = pos + np.asarray(off)
        ok = np.all((nb >= 0) & (nb < np.asarray(spec.sides)), axis=1)
        nb_ids = (nb[ok] * strides).sum(axis=1)
        for x, y in zip(np.flatnonzero(ok), nb_ids):
            local[int(x)].append(int(y))
    for adj in local:
        adj.sort()
    return space, local


def validate_local_edges(space: MetricSpace, local: list[list[int]],
                         sample_pairs: int = 200_000,
                         rng: np.random.Generator | None = None):
    """Check that every (node, target) pair has a strictly closer neighbor.

    Exhaustive up to 4096 objects, sampled beyond. Returns None when the
    property holds, else the first violating (node, target) pair.
    """
    n = space.n
    deg = max((len(a) for a in local), default=0)
    if deg == 0:
        return (0, 1 if n > 1 else 0)
    nbr = np.full((n, deg), -1, dtype=int)
    for x, adj in enumerate(local):
        nbr[x, :len(adj)] = adj
    mask = nbr < 0
    safe = np.where(mask, 0, nbr)
    if n <= 4096:
        targets = range(n)
    else:
        if rng is None:
            rng = np.random.default_rng(0)
        targets = rng.integers(0, n, size=max(1, sample_pairs // n))
    for t in targets:
        d = space.distances_from(int(t))
        nd = d[safe]
        nd[mask] = np.inf
        slack = space.equality_tolerance * np.maximum(1.0, d)
        stuck = nd.min(axis=1) >= d - slack
        stuck[int(t)] = False
        if stuck.any():
            return (int(np.flatnonzero(stuck)[0]), int(t))
    return None


def sample_shortcuts(mu: Distribution, space: MetricSpace,
                     rng: np.random.Generator) -> dict[int, int]:
    """One independent shortcut target per node, rank-proportionally.

    Nodes with no candidate besides themselves get no shortcut.
    """
    policy = ExactRankPolicy(space, mu)
    out: dict[int, int] = {}
    for x in range(space.n):
        try:
            out[x] = policy.sample(x, rng)
        except NoCandidateError:
            continue
    return out


@dataclass
class NavGraph:
    """Local edges plus at most one shortcut out-edge per node."""

    space: MetricSpace
    local: list[list[int]]
    shortcut: dict[int, int] = field(default_factory=dict)

    def neighborhood(self, x: ObjectId) -> list[int]:
        adj = self.local[x]
        s = self.shortcut.get(x)
        if s is None or s in adj or s == x:
            return adj
        return [*adj, s]

    def shortcut_edges(self) -> set[tuple[int, int]]:
        """Shortcut edge set, kept disjoint from the local edges."""
        local_pairs = {(x, y) for x, adj in enumerate(self.local) for y in adj}
        return {(x, y) for x, y in self.shortcut.items()
                if (x, y) not in local_pairs and x != y}

    def dump(self) -> str:
        lines = []
        for x in range(self.space.n):
            nbrs = ",".join(str(y) for y in self.local[x])
            sc = self.shortcut.get(x)
            lines.append(f"{x} | local={nbrs} | shortcut={sc if sc is not None else '-'}")
        return "\n".join(lines) + "\n"


class _LazyShortcuts:
    """Per-trial shortcut draws, sampled only at visited nodes.

    Equivalent to presampling the whole edge set because draws are
    independent across nodes and forwarding never revisits a node.
    """

    def __init__(self, policy: ExactRankPolicy, rng: np.random.Generator):
        self.policy = policy
        self.rng = rng
        self.seen: dict[int, int | None] = {}

    def get(self, x: ObjectId) -> int | None:
        if x not in self.seen:
            try:
                self.seen[x] = self.policy.sample(x, self.rng)
            except NoCandidateError:
                self.seen[x] = None
        return self.seen[x]


def greedy_forward(graph: NavGraph, oracle: ComparisonOracle, s: ObjectId,
                   t: ObjectId, cap: int,
                   phase_tracker: PhaseTracker | None = None,
                   shortcut_override=None) -> SearchOutcome:
    """Forward a message to the neighbor closest to the target, repeatedly.

    The winner at each node is found with one oracle comparison per
    neighbor, folded in a fixed neighbor order so deterministic tie
    policies give reproducible paths. Running out of cap means the local
    edges are broken, which is an integrity failure rather than a result.
    """
    graph.space.check_id(s)
    graph.space.check_id(t)
    x = s
    hops = 0
    trace: list[tuple[ObjectId, ObjectId, ObjectId]] = []
    phases: dict[int, int] = {}
    while x != t:
        if hops >= cap:
            raise GraphIntegrityError(
                f"forwarding exceeded {cap} hops; local edges violate "
                "the closer-neighbor property")
        if shortcut_override is not None:
            nbrs = list(graph.local[x])
            sc = shortcut_override.get(x)
            if sc is not None and sc != x and sc not in nbrs:
                nbrs.append(sc)
        else:
            nbrs = graph.neighborhood(x)
        if phase_tracker is not None:
            j = phase_tracker.phase_of(x)
            phases[j] = phases.get(j, 0) + 1
        winner = oracle.ask_set(nbrs, t)
        trace.append((x, winner, winner))
        x = winner
        hops += 1
    return SearchOutcome(hops, trace, phases, Terminated.FOUND)


def expected_forwarding_cost(demand: Demand, spec: GridSpec, trials: int,
                             seed: int, mu: Distribution | None = None,
                             oracle_cfg: OracleConfig | None = None,
                             resample: bool = True,
                             track_phases: bool = False):
    """Mean greedy-forwarding hops over (s, t) ~ demand.

    Shortcut edges are redrawn each trial by default, matching the
    expectation over random edge sets; ``resample=False`` freezes one
    sampled set for the whole experiment, as in a deployed network.
    """
    from .search import CostSummary  # local import to avoid cycle confusion

    space, local = grid_space(spec)
    if mu is None:
        from .demand import marginals
        _, mu = marginals(demand)
    if oracle_cfg is None:
        oracle_cfg = OracleConfig()
    policy = ExactRankPolicy(space, mu)
    graph = NavGraph(space, local)
    if not resample:
        graph.shortcut = sample_shortcuts(mu, space, substream(seed, "shortcuts", 0))
    sources, targets = demand.sample(substream(seed, "demand"), trials)
    cap = 4 * space.n
    agg = _Welford()
    dist_agg = _Welford()
    self_pairs = 0
    trackers: dict[int, PhaseTracker] = {}
    for trial, (s, t) in enumerate(zip(sources, targets)):
        s, t = int(s), int(t)
        if s == t:
            self_pairs += 1
            continue
        tracker = None
        if track_phases:
            tracker = trackers.get(t)
            if tracker is None:
                tracker = PhaseTracker(RankTable(mu, space, t), mu.mass(t))
                trackers[t] = tracker
        oracle = ComparisonOracle(space, oracle_cfg,
                                  rng=substream(seed, "oracle", trial))
        override = None
        if resample:
            override = _LazyShortcuts(policy, substream(seed, "shortcuts", trial))
        out = greedy_forward(graph, oracle, s, t, cap,
                             phase_tracker=tracker, shortcut_override=override)
        agg.add(out.cost)
        dist_agg.add(space.distance(s, t))
    return CostSummary(
        trials=trials, eligible=agg.count, mean=agg.mean, stderr=agg.stderr,
        self_pairs=self_pairs, cap_exceeded=0, rejected=0,
        phase_means={}, mean_distance=dist_agg.mean,
    )
