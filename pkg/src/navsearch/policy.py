"""Selection policies for greedy content search.

The exact policy proposes candidates with probability proportional to
mu(y) / r_x(y): popular objects and objects close to the current one are
both favored. On a uniform k-dimensional grid this reduces to the
classic d(x,y)^-k shortcut law.
"""
from __future__ import annotations

import numpy as np

from .demand import Distribution
from .measures import RankTable
from .space import MetricSpace, ObjectId


class NoCandidateError(ValueError):
    """The candidate set for a proposal distribution is empty."""


def _rank_weights(mu: Distribution, space: MetricSpace, x: ObjectId):
    """Weights mu(y)/r_x(y) over supp(mu) minus x, plus their ids.

    The current object is excluded even when it carries target mass:
    proposing it would waste a query. Its mass still counts inside every
    ball, which is what the normalization bound expects.
    """
    space.check_id(x)
    table = RankTable(mu, space, x)
    ranks = table.all_ranks()
    ids = mu.support
    ids = ids[ids != x]
    if ids.size == 0:
        raise NoCandidateError(f"no proposal candidates besides object {x}")
    w = mu.probs[ids] / ranks[ids]
    return ids, w


def shortcut_distribution(mu: Distribution, space: MetricSpace, x: ObjectId) -> Distribution:
    """Proposal/shortcut distribution of the current object x."""
    ids, w = _rank_weights(mu, space, x)
    probs = np.zeros(space.n)
    probs[ids] = w / w.sum()
    return Distribution(probs)


def normalizer(mu: Distribution, space: MetricSpace, x: ObjectId) -> float:
    """Z_x, the total rank-proportional weight at x.

    Bounded by 1 + ln(1/mu(x*)) for x* any closest target to x, and in
    turn by three times the max-entropy (in bits).
    """
    _, w = _rank_weights(mu, space, x)
    return float(w.sum())


def normalizer_bound(mu: Distribution, space: MetricSpace, x: ObjectId) -> float:
    """1 + ln(1/mu(x*)) with x* the best-mass nearest target to x."""
    row = space.distances_from(x)
    support = mu.support
    d = row[support]
    nearest = d <= d.min() + space.tie_slack(float(d.min()))
    best_mass = float(mu.probs[support[nearest]].max())
    return 1.0 + float(np.log(1.0 / best_mass))


def all_normalizers(mu: Distribution, space: MetricSpace) -> tuple[np.ndarray, np.ndarray]:
    """(Z_x, 1 + ln(1/mu(x*))) for every x, in one vectorized pass.

    Row-sorts the full distance matrix once; intended for bound sweeps
    over many instances where per-x table construction would dominate.
    """
    n = space.n
    rows = np.stack([space.distances_from(x) for x in range(n)])
    order = np.argsort(rows, axis=1, kind="stable")
    sorted_d = np.take_along_axis(rows, order, axis=1)
    sorted_p = np.take_along_axis(np.broadcast_to(mu.probs, (n, n)), order, axis=1)
    cum = np.cumsum(sorted_p, axis=1)
    # inclusive rank of each object: cumulative mass at the end of its tie run
    tol = space.equality_tolerance
    ranks_sorted = np.empty((n, n))
    for x in range(n):
        d = sorted_d[x]
        c = cum[x]
        j = n - 1
        while j >= 0:
            i = j
            while i > 0 and d[i] - d[i - 1] <= tol * max(1.0, d[i]):
                i -= 1
            ranks_sorted[x, i:j + 1] = c[j]
            j = i - 1
    ranks = np.empty((n, n))
    np.put_along_axis(ranks, order, ranks_sorted, axis=1)
    on_support = mu.probs > 0
    w = np.where(on_support[None, :], mu.probs[None, :] / np.where(ranks > 0, ranks, 1.0), 0.0)
    np.fill_diagonal(w, 0.0)
    z = w.sum(axis=1)
    # nearest-target bound: best mass among the closest support points
    sup_idx = mu.support
    d_sup = rows[:, sup_idx]
    dmin = d_sup.min(axis=1)
    slack = tol * np.maximum(1.0, dmin)
    near = d_sup <= (dmin + slack)[:, None]
    best = np.where(near, mu.probs[sup_idx][None, :], 0.0).max(axis=1)
    return z, 1.0 + np.log(1.0 / best)


class ExactRankPolicy:
    """Memoryless policy drawing proposals from mu(y)/r_x(y) weights."""

    def __init__(self, space: MetricSpace, mu: Distribution):
        if mu.n != space.n:
            raise ValueError("mu must cover the object set")
        self.space = space
        self.mu = mu
        self._cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def _arm(self, x: ObjectId) -> tuple[np.ndarray, np.ndarray]:
        arm = self._cache.get(x)
        if arm is None:
            ids, w = _rank_weights(self.mu, self.space, x)
            cum = np.cumsum(w)
            cum /= cum[-1]
            arm = (ids, cum)
            self._cache[x] = arm
        return arm

    def proposal_distribution(self, x: ObjectId) -> Distribution:
        return shortcut_distribution(self.mu, self.space, x)

    def sample(self, x: ObjectId, rng: np.random.Generator) -> ObjectId:
        ids, cum = self._arm(x)
        return int(ids[np.searchsorted(cum, rng.random(), side="right")])

    def proposable(self, t: ObjectId) -> bool:
        return self.mu.probs[t] > 0

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_cache"] = {}
        return state


class UniformPolicy:
    """Pure-exploration baseline: uniform over everything but x."""

    def __init__(self, n: int):
        self.n = n

    def proposal_distribution(self, x: ObjectId) -> Distribution:
        probs = np.full(self.n, 1.0 / (self.n - 1))
        probs[x] = 0.0
        return Distribution(probs)

    def sample(self, x: ObjectId, rng: np.random.Generator) -> ObjectId:
        y = int(rng.integers(self.n - 1))
        return y if y < x else y + 1

    def proposable(self, t: ObjectId) -> bool:
        return True


# -- order-only (non-metric) ranks -------------------------------------


class TargetOrder:
    """Per-object total preorder of a target set, by closeness.

    Ranks are counting ranks: r_x(y) is the number of targets at
    distance <= d(x, y) from x, so equally close targets share the top
    rank of their tie class. Built from the space's comparison order;
    policies downstream never touch raw distances.
    """

    def __init__(self, space: MetricSpace, targets):
        self.space = space
        self.targets = np.asarray(sorted(int(t) for t in targets), dtype=int)
        if self.targets.size == 0:
            raise ValueError("empty target set")
        self._rank_cache: dict[tuple[int, bool], dict[int, int]] = {}

    @property
    def size(self) -> int:
        return int(self.targets.size)

    def ranks_from(self, x: ObjectId, exclude_self: bool = False) -> dict[int, int]:
        """Counting ranks of every target w.r.t. x.

        With ``exclude_self`` (used when x is itself a target), x is
        dropped from the counted set so the remaining ranks run 1..|T|-1.
        """
        key = (int(x), exclude_self)
        got = self._rank_cache.get(key)
        if got is not None:
            return got
        members = self.targets
        if exclude_self:
            members = members[members != x]
        row = self.space.distances_from(x)[members]
        order = np.argsort(row, kind="stable")
        sorted_d = row[order]
        ranks = np.empty(members.size, dtype=int)
        i = 0
        while i < members.size:
            j = i
            while (j + 1 < members.size
                   and sorted_d[j + 1] - sorted_d[i] <= self.space.tie_slack(float(sorted_d[i]))):
                j += 1
            ranks[order[i:j + 1]] = j + 1  # whole tie class shares the top count
            i = j + 1
        got = {int(m): int(r) for m, r in zip(members, ranks)}
        self._rank_cache[key] = got
        return got


def nonmetric_rank(order: TargetOrder, x: ObjectId, y: ObjectId) -> int:
    """1-based count of targets at least as close to x as y is."""
    ranks = order.ranks_from(x)
    try:
        return ranks[int(y)]
    except KeyError:
        raise ValueError(f"object {y} is not in the target set") from None


def disorder_constant(order: TargetOrder) -> float:
    """Smallest D with r_x(y) <= D * (r_z(y) + r_z(x)) over all triples.

    Brute force over T^3; always >= 1/2 (take y = x = z).
    """
    t = order.targets
    if t.size < 1:
        raise ValueError("empty target set")
    k = t.size
    r = np.empty((k, k))
    for i, x in enumerate(t):
        ranks = order.ranks_from(int(x))
        r[i] = [ranks[int(y)] for y in t]
    best = 0.0
    for zi in range(k):
        denom = r[zi][None, :] + r[zi][:, None]  # (x, y) -> r_z(y) + r_z(x)
        best = max(best, float(np.max(r / denom)))
    return best


def nonmetric_policy(order: TargetOrder, x: ObjectId) -> Distribution:
    """Proposal mass proportional to 1/r_x(w) over the targets besides x.

    When x is itself a target, ranks are recomputed within T minus x, so
    the normalizer is the harmonic number H_{|T|-1}; otherwise ranks run
    over T and the normalizer is H_{|T|}.
    """
    exclude = int(x) in order.ranks_from(x)
    ranks = order.ranks_from(x, exclude_self=exclude)
    ids = np.array([m for m in ranks if m != x], dtype=int)
    if ids.size == 0:
        raise NoCandidateError(f"no target candidates besides object {x}")
    w = np.array([1.0 / ranks[int(m)] for m in ids])
    probs = np.zeros(order.space.n)
    probs[ids] = w / w.sum()
    return Distribution(probs)


class NonmetricPolicy:
    """Memoryless policy over a target set using only order information."""

    def __init__(self, order: TargetOrder):
        self.order = order
        self._cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def _arm(self, x: ObjectId):
        arm = self._cache.get(x)
        if arm is None:
            dist = nonmetric_policy(self.order, x)
            ids = dist.support
            cum = np.cumsum(dist.probs[ids])
            cum /= cum[-1]
            arm = (ids, cum)
            self._cache[x] = arm
        return arm

    def proposal_distribution(self, x: ObjectId) -> Distribution:
        return nonmetric_policy(self.order, x)

    def sample(self, x: ObjectId, rng: np.random.Generator) -> ObjectId:
        ids, cum = self._arm(x)
        return int(ids[np.searchsorted(cum, rng.random(), side="right")])

    def proposable(self, t: ObjectId) -> bool:
        return int(t) in order_members(self.order)

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_cache"] = {}
        return state


def order_members(order: TargetOrder) -> set[int]:
    return set(order.targets.tolist())
