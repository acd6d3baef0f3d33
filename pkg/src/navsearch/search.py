"""Greedy content search: the propose-and-compare loop, proximity-batch
variant, and the seeded Monte-Carlo cost estimator."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .demand import Demand, Distribution, max_entropy
from .measures import RankTable
from .oracle import ComparisonOracle, OracleConfig
from .seeds import substream
from .space import MetricSpace, ObjectId


class Terminated(Enum):
    FOUND = "found"
    CAP_EXCEEDED = "cap_exceeded"
    REJECTED = "rejected"


@dataclass
class SearchOutcome:
    cost: int
    trace: list[tuple[ObjectId, ObjectId, ObjectId]]
    phase_counts: dict[int, int]
    terminated: Terminated

    @property
    def found(self) -> bool:
        return self.terminated is Terminated.FOUND


class SearchSession:
    """Step-driven state of one greedy search.

    propose() draws the next candidate; observe() feeds back which of
    (current, proposed) won the comparison. The driver may be the
    simulated oracle or a human clicking in the UI; the session cannot
    tell the difference.
    """

    def __init__(self, policy, s: ObjectId, rng: np.random.Generator, cap: int):
        self.policy = policy
        self.current = s
        self.rng = rng
        self.cap = cap
        self.cost = 0
        self.trace: list[tuple[ObjectId, ObjectId, ObjectId]] = []
        self.pending: ObjectId | None = None

    def propose(self) -> ObjectId:
        if self.pending is not None:
            raise RuntimeError("previous proposal still unanswered")
        y = self.policy.sample(self.current, self.rng)
        self.cost += 1
        self.pending = y
        return y

    def observe(self, winner: ObjectId) -> None:
        y = self.pending
        if y is None:
            raise RuntimeError("no proposal outstanding")
        if winner not in (self.current, y):
            raise ValueError("winner must be the current or the proposed object")
        self.trace.append((self.current, y, winner))
        self.current = winner
        self.pending = None

    @property
    def exhausted(self) -> bool:
        return self.cost >= self.cap


def default_cap(n: int, mu: Distribution | None = None) -> int:
    """Safety cap on proposals: 50 * n * (1 + max-entropy)."""
    hmax = max_entropy(mu) if mu is not None else math.log2(max(2, n))
    return int(math.ceil(50 * n * (1 + hmax)))


class PhaseTracker:
    """Attributes each query to the rank phase of the current object.

    Phase j means the current object's rank w.r.t. the target is about
    2^j times the target's own mass; it can only shrink along a search.
    """

    def __init__(self, rank_table: RankTable, target_mass: float):
        self.table = rank_table
        self.target_mass = target_mass

    def phase_of(self, x: ObjectId) -> int:
        r = self.table.rank_of(x)
        if r <= 0 or self.target_mass <= 0:
            return 0
        return max(0, int(math.floor(math.log2(r / self.target_mass))))


def greedy_content_search(policy, oracle: ComparisonOracle, s: ObjectId,
                          t: ObjectId, cap: int,
                          rng: np.random.Generator,
                          phase_tracker: PhaseTracker | None = None) -> SearchOutcome:
    """Propose-and-compare until the target itself comes up.

    The cost counts proposals, including the final one that turns out to
    be the target. Searching from the target costs 0 by convention.
    Targets the policy can never propose are rejected with a distinct
    status rather than spinning until the cap.
    """
    phases: dict[int, int] = {}
    if s == t:
        return SearchOutcome(0, [], phases, Terminated.FOUND)
    if hasattr(policy, "proposable") and not policy.proposable(t):
        return SearchOutcome(0, [], phases, Terminated.REJECTED)
    session = SearchSession(policy, s, rng, cap)
    while not session.exhausted:
        x = session.current
        y = session.propose()
        if phase_tracker is not None:
            j = phase_tracker.phase_of(x)
            phases[j] = phases.get(j, 0) + 1
        if y == t:
            return SearchOutcome(session.cost, session.trace, phases, Terminated.FOUND)
        session.observe(oracle.ask(x, y, t).winner)
    return SearchOutcome(session.cost, session.trace, phases, Terminated.CAP_EXCEEDED)


def proximity_search(policy, oracle: ComparisonOracle, p: int, s: ObjectId,
                     t: ObjectId, cap: int, rng: np.random.Generator,
                     phase_tracker: PhaseTracker | None = None) -> SearchOutcome:
    """Batch variant: p independent proposals per oracle round.

    Each round costs one query to the proximity oracle; a round whose
    batch contains the target ends the search.
    """
    if p < 2:
        raise ValueError("proximity batches need p >= 2")
    phases: dict[int, int] = {}
    if s == t:
        return SearchOutcome(0, [], phases, Terminated.FOUND)
    if hasattr(policy, "proposable") and not policy.proposable(t):
        return SearchOutcome(0, [], phases, Terminated.REJECTED)
    x = s
    cost = 0
    trace: list[tuple[ObjectId, ObjectId, ObjectId]] = []
    while cost < cap:
        batch = [policy.sample(x, rng) for _ in range(p)]
        cost += 1
        if phase_tracker is not None:
            j = phase_tracker.phase_of(x)
            phases[j] = phases.get(j, 0) + 1
        if t in batch:
            return SearchOutcome(cost, trace, phases, Terminated.FOUND)
        winner = oracle.ask_set([x, *batch], t)
        trace.append((x, winner, winner))
        x = winner
    return SearchOutcome(cost, trace, phases, Terminated.CAP_EXCEEDED)


# -- Monte-Carlo cost estimation ---------------------------------------


@dataclass
class CostSummary:
    """Aggregated search cost over seeded trials.

    Self pairs (s == t) cost zero by convention and are kept out of the
    mean, which feeds the bound checks; cap-hits stay in at cap value
    and are surfaced through ``cap_exceeded``.
    """

    trials: int
    eligible: int
    mean: float
    stderr: float
    self_pairs: int
    cap_exceeded: int
    rejected: int
    phase_means: dict[int, float] = field(default_factory=dict)
    mean_distance: float = 0.0

    def as_record(self) -> dict:
        return {
            "trials": self.trials,
            "eligible": self.eligible,
            "mean": self.mean,
            "stderr": self.stderr,
            "self_pairs": self.self_pairs,
            "cap_exceeded": self.cap_exceeded,
            "rejected": self.rejected,
            "phase_means": {str(k): v for k, v in sorted(self.phase_means.items())},
            "mean_distance": self.mean_distance,
        }


class _Welford:
    """Streaming mean/variance with exact order-fixed merging."""

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self.m2 = 0.0

    def add(self, value: float) -> None:
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (value - self.mean)

    def merge(self, other: "_Welford") -> None:
        if other.count == 0:
            return
        if self.count == 0:
            self.count, self.mean, self.m2 = other.count, other.mean, other.m2
            return
        total = self.count + other.count
        delta = other.mean - self.mean
        self.mean += delta * other.count / total
        self.m2 += other.m2 + delta * delta * self.count * other.count / total
        self.count = total

    @property
    def stderr(self) -> float:
        if self.count < 2:
            return 0.0
        return math.sqrt(self.m2 / (self.count - 1) / self.count)


_CHUNK = 256


@dataclass
class _ChunkJob:
    policy: object
    space: MetricSpace
    oracle_cfg: OracleConfig
    seed: int
    start: int
    sources: np.ndarray
    targets: np.ndarray
    cap: int
    mu: Distribution | None
    p: int | None


def _run_chunk(job: _ChunkJob):
    agg = _Welford()
    dist_agg = _Welford()
    phase_tot: dict[int, int] = {}
    self_pairs = cap_exceeded = rejected = 0
    tables: dict[int, PhaseTracker] = {}
    for i, (s, t) in enumerate(zip(job.sources, job.targets)):
        s, t = int(s), int(t)
        trial = job.start + i
        if s == t:
            self_pairs += 1
            continue
        tracker = None
        if job.mu is not None:
            tracker = tables.get(t)
            if tracker is None:
                tracker = PhaseTracker(RankTable(job.mu, job.space, t), job.mu.mass(t))
                tables[t] = tracker
        oracle = ComparisonOracle(job.space, job.oracle_cfg,
                                  rng=substream(job.seed, "oracle", trial))
        rng = substream(job.seed, "policy", trial)
        if job.p is None:
            out = greedy_content_search(job.policy, oracle, s, t, job.cap, rng, tracker)
        else:
            out = proximity_search(job.policy, oracle, job.p, s, t, job.cap, rng, tracker)
        if out.terminated is Terminated.REJECTED:
            rejected += 1
            continue
        if out.terminated is Terminated.CAP_EXCEEDED:
            cap_exceeded += 1
        agg.add(out.cost)
        dist_agg.add(job.space.distance(s, t))
        for j, c in out.phase_counts.items():
            phase_tot[j] = phase_tot.get(j, 0) + c
    return agg, dist_agg, phase_tot, self_pairs, cap_exceeded, rejected


def expected_search_cost(policy, oracle_cfg: OracleConfig, demand: Demand,
                         trials: int, seed: int, space: MetricSpace,
                         cap: int | None = None, mu: Distribution | None = None,
                         p: int | None = None, workers: int = 1) -> CostSummary:
    """Mean search cost over (s, t) ~ demand with per-trial seed streams.

    Trials are split into fixed-size chunks merged in chunk order, so the
    result is byte-identical for any worker count.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if cap is None:
        if mu is None:
            raise ValueError("need mu to derive the default cap")
        cap = default_cap(space.n, mu)
    sources, targets = demand.sample(substream(seed, "demand"), trials)
    jobs = [
        _ChunkJob(policy, space, oracle_cfg, seed, lo,
                  sources[lo:lo + _CHUNK], targets[lo:lo + _CHUNK], cap, mu, p)
        for lo in range(0, trials, _CHUNK)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_chunk, jobs))
    else:
        results = [_run_chunk(job) for job in jobs]

    agg = _Welford()
    dist_agg = _Welford()
    phase_tot: dict[int, int] = {}
    self_pairs = cap_exceeded = rejected = 0
    for part, dpart, phases, sp, ce, rj in results:
        agg.merge(part)
        dist_agg.merge(dpart)
        for j, c in phases.items():
            phase_tot[j] = phase_tot.get(j, 0) + c
        self_pairs += sp
        cap_exceeded += ce
        rejected += rj
    eligible = agg.count
    phase_means = {j: c / eligible for j, c in phase_tot.items()} if eligible else {}
    return CostSummary(
        trials=trials, eligible=eligible, mean=agg.mean, stderr=agg.stderr,
        self_pairs=self_pairs, cap_exceeded=cap_exceeded, rejected=rejected,
        phase_means=phase_means, mean_distance=dist_agg.mean,
    )
