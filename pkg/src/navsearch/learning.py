"""Online learning of target popularity and closeness orders.

Each object keeps a hit counter (popularity estimate) and a constraint
DAG over the other objects (closeness order estimate). Completed
searches flush their oracle answers into the target's DAG; cycles mean
the members were equally close and collapse into one class. Proposals
then mix estimated rank-proportional weights with a uniform floor.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .demand import Demand, Distribution, marginals
from .oracle import ComparisonOracle, OracleConfig
from .search import Terminated, greedy_content_search
from .seeds import substream
from .space import MetricSpace, ObjectId


class TargetCounter:
    """Per-object request counts and the popularity estimate they imply."""

    def __init__(self, n: int, mode: str = "raw", alpha: float = 0.001):
        if mode not in ("raw", "ema"):
            raise ValueError("mode must be 'raw' or 'ema'")
        self.n = n
        self.mode = mode
        self.alpha = alpha
        self.counts = np.zeros(n)
        self.timeslots = 0
        self._ema = np.zeros(n)

    def record_target(self, t: ObjectId) -> None:
        if not (0 <= t < self.n):
            raise ValueError(f"object id {t} outside [0, {self.n})")
        self.counts[t] += 1
        self.timeslots += 1
        if self.mode == "ema":
            self._ema *= 1.0 - self.alpha
            self._ema[t] += self.alpha

    def estimate(self) -> np.ndarray | None:
        """Popularity estimate per object; None before any observation."""
        if self.timeslots == 0:
            return None
        if self.mode == "ema":
            total = self._ema.sum()
            return self._ema / total if total > 0 else None
        return self.counts / self.timeslots


class OrderStore:
    """Incrementally learned closeness order around one reference object.

    Constraints "u is at least as close as v" arrive as directed edges of
    a DAG over the other objects; a cycle proves its members equally
    close, so they collapse into one class. order() extends the DAG to a
    total order of classes, placing unconstrained objects by id so the
    output is stable for a given constraint history.
    """

    def __init__(self, n: int, reference: ObjectId):
        self.n = n
        self.reference = reference
        self._parent = list(range(n))          # union-find over collapsed classes
        self._succ: dict[int, set[int]] = {}   # edges between class roots
        self._pred: dict[int, set[int]] = {}
        self.constraints: set[tuple[int, int]] = set()
        self._order: list[list[int]] | None = None
        self._pos: dict[int, int] | None = None
        self.version = 0

    # -- union-find ----------------------------------------------------

    def _find(self, a: int) -> int:
        parent = self._parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def add(self, u: ObjectId, v: ObjectId) -> None:
        """Record that u is at least as close to the reference as v."""
        if u == self.reference or v == self.reference:
            raise ValueError("constraints cannot involve the reference object")
        if not (0 <= u < self.n and 0 <= v < self.n) or u == v:
            raise ValueError(f"bad constraint ({u}, {v})")
        if (u, v) in self.constraints:
            return
        self.constraints.add((u, v))
        ru, rv = self._find(u), self._find(v)
        if ru == rv:
            return
        # Fast path: consistent with the cached order, no cycle possible.
        if self._pos is not None and self._pos[ru] < self._pos[rv]:
            self._succ.setdefault(ru, set()).add(rv)
            self._pred.setdefault(rv, set()).add(ru)
            self.version += 1
            return
        if self._reaches(rv, ru):
            self._collapse(ru, rv)
        else:
            self._succ.setdefault(ru, set()).add(rv)
            self._pred.setdefault(rv, set()).add(ru)
        self._order = None
        self._pos = None
        self.version += 1

    def _reaches(self, src: int, dst: int) -> bool:
        stack = [src]
        seen = {src}
        while stack:
            a = stack.pop()
            if a == dst:
                return True
            for b in self._succ.get(a, ()):
                if b not in seen:
                    seen.add(b)
                    stack.append(b)
        return False

    def _collapse(self, ru: int, rv: int) -> None:
        """Merge every class on a path rv ~> ru (they form a cycle with
        the new edge ru -> rv)."""
        desc = {rv}
        stack = [rv]
        while stack:
            a = stack.pop()
            for b in self._succ.get(a, ()):
                if b not in desc:
                    desc.add(b)
                    stack.append(b)
        anc = {ru}
        stack = [ru]
        while stack:
            a = stack.pop()
            for b in self._pred.get(a, ()):
                if b not in anc:
                    anc.add(b)
                    stack.append(b)
        merge = desc & anc
        merge.update((ru, rv))
        root = min(merge)
        succ_all: set[int] = set()
        pred_all: set[int] = set()
        for a in merge:
            succ_all |= self._succ.pop(a, set())
            pred_all |= self._pred.pop(a, set())
            self._parent[a] = root
        self._parent[root] = root
        succ_all = {self._find(b) for b in succ_all} - {root}
        pred_all = {self._find(b) for b in pred_all} - {root}
        # redirect other classes' edges at swallowed roots to the survivor
        for mapping in (self._succ, self._pred):
            for members in mapping.values():
                moved = [b for b in members if self._find(b) == root and b != root]
                for b in moved:
                    members.discard(b)
                    members.add(root)
        if succ_all:
            self._succ[root] = succ_all
        if pred_all:
            self._pred[root] = pred_all

    # -- ordered partition ----------------------------------------------

    def order(self) -> list[list[int]]:
        """Classes in a constraint-respecting total order.

        Kahn's algorithm with a min-id heap, so ties and unconstrained
        singletons interleave deterministically by object id.
        """
        if self._order is not None:
            return self._order
        import heapq

        members: dict[int, list[int]] = {}
        for obj in range(self.n):
            if obj == self.reference:
                continue
            members.setdefault(self._find(obj), []).append(obj)
        indeg = {root: 0 for root in members}
        for root in members:
            for b in self._succ.get(root, ()):
                indeg[b] += 1
        ready = [root for root, k in indeg.items() if k == 0]
        heapq.heapify(ready)
        out: list[list[int]] = []
        pos: dict[int, int] = {}
        while ready:
            root = heapq.heappop(ready)
            pos[root] = len(out)
            out.append(sorted(members[root]))
            for b in self._succ.get(root, ()):
                indeg[b] -= 1
                if indeg[b] == 0:
                    heapq.heappush(ready, b)
        if len(out) != len(members):  # pragma: no cover - DAG by construction
            raise RuntimeError("constraint graph is not acyclic")
        self._order = out
        self._pos = pos
        return out

    def class_position(self, w: ObjectId) -> int:
        self.order()
        return self._pos[self._find(w)]


def estimated_rank(store: OrderStore, counter: TargetCounter, w: ObjectId) -> float:
    """Prefix mass of the learned partition up to and including w's class."""
    if w == store.reference:
        raise ValueError("rank of the reference object is undefined")
    mu_hat = counter.estimate()
    if mu_hat is None:
        return 0.0
    total = 0.0
    target = store._find(w)
    for cls in store.order():
        total += float(mu_hat[cls].sum())
        if store._find(cls[0]) == target:
            return total
    raise ValueError(f"object {w} missing from the partition")


class LearnedPolicy:
    """Estimated rank-proportional proposals with an exploration floor.

    Every candidate keeps at least epsilon/(n-1) mass, which both
    guarantees termination and keeps feeding the order stores.
    """

    def __init__(self, counter: TargetCounter, stores: list[OrderStore],
                 epsilon: float = 0.1):
        if not (0 < epsilon < 1):
            raise ValueError("epsilon must lie in (0, 1)")
        self.counter = counter
        self.stores = stores
        self.epsilon = epsilon
        self.n = counter.n
        self._cache: dict[int, tuple[int, int, np.ndarray, np.ndarray]] = {}

    def _weights(self, x: ObjectId) -> tuple[np.ndarray, np.ndarray]:
        store = self.stores[x]
        mu_hat = self.counter.estimate()
        ids_list: list[int] = []
        ranks: list[float] = []
        prefix = 0.0
        for cls in store.order():
            if mu_hat is not None:
                prefix += float(mu_hat[cls].sum())
            for obj in cls:
                ids_list.append(obj)
                ranks.append(prefix)
        ids = np.array(ids_list, dtype=int)
        if mu_hat is None:
            return ids, np.zeros(ids.size)
        mass = mu_hat[ids]
        r = np.array(ranks)
        w = np.divide(mass, r, out=np.zeros_like(mass), where=r > 0)
        return ids, w

    def proposal_probs(self, x: ObjectId) -> tuple[np.ndarray, np.ndarray]:
        """(candidate ids, probabilities); cached per learned-state version."""
        store = self.stores[x]
        key = (self.counter.timeslots, store.version)
        hit = self._cache.get(x)
        if hit is not None and (hit[0], hit[1]) == key:
            return hit[2], hit[3]
        ids, w = self._weights(x)
        z = w.sum()
        floor = self.epsilon / (self.n - 1)
        if z > 0:
            probs = w * ((1.0 - self.epsilon) / z) + floor
        else:
            probs = np.full(ids.size, 1.0 / ids.size)  # degenerate start
        self._cache[x] = (key[0], key[1], ids, probs)
        return ids, probs

    def proposal_distribution(self, x: ObjectId) -> Distribution:
        ids, probs = self.proposal_probs(x)
        dense = np.zeros(self.n)
        dense[ids] = probs
        return Distribution(dense)

    def sample(self, x: ObjectId, rng: np.random.Generator) -> ObjectId:
        ids, probs = self.proposal_probs(x)
        cum = np.cumsum(probs)
        u = rng.random() * cum[-1]
        return int(ids[np.searchsorted(cum, u, side="right")])

    def proposable(self, t: ObjectId) -> bool:
        return True


def learned_distribution(policy: LearnedPolicy, x: ObjectId) -> Distribution:
    """Proposal distribution of the learned policy at x."""
    return policy.proposal_distribution(x)


@dataclass
class AdaptiveRun:
    counter: TargetCounter
    stores: list[OrderStore]
    policy: LearnedPolicy
    costs: np.ndarray
    cap_exceeded: int

    def window_mean(self, fraction: float = 0.1) -> float:
        k = max(1, int(len(self.costs) * fraction))
        return float(self.costs[-k:].mean())


def flush_history(store: OrderStore, trace, target: ObjectId) -> int:
    """Replay a finished search's oracle answers into the target's store.

    Every answer (x, y, winner) records winner-at-least-as-close-as-loser;
    entries touching the target itself carry no orderable content and are
    skipped. Returns the number of constraints recorded.
    """
    added = 0
    for x, y, winner in trace:
        loser = y if winner == x else x
        if winner == target or loser == target:
            continue
        store.add(winner, loser)
        added += 1
    return added


def run_adaptive(demand: Demand, epsilon: float, timeslots: int,
                 oracle_cfg: OracleConfig, seed: int, space: MetricSpace,
                 counter_mode: str = "raw",
                 state: tuple[TargetCounter, list[OrderStore]] | None = None,
                 first_slot: int = 0) -> AdaptiveRun:
    """Time-slotted driver: search under the learned policy, then flush.

    Each slot draws a target from the demand's target marginal and a
    source uniformly at random, runs a greedy search with the current
    learned policy, and only then folds the target hit and the oracle
    answers back into the learned state. Requires every ordered pair to
    carry demand, otherwise some orders could never be learned.
    """
    if not demand.all_pairs_positive():
        raise ValueError("adaptive learning needs lambda(u, v) > 0 for all pairs")
    n = space.n
    if state is None:
        counter = TargetCounter(n, mode=counter_mode)
        stores = [OrderStore(n, x) for x in range(n)]
    else:
        counter, stores = state
    policy = LearnedPolicy(counter, stores, epsilon)
    cap = int(math.ceil(50 * n * (1 + math.log2(max(2, n)))))
    _, mu = marginals(demand)
    costs = np.zeros(timeslots)
    cap_exceeded = 0
    for i in range(timeslots):
        slot = first_slot + i
        rng = substream(seed, "learning", slot)
        t = int(mu.sample(rng))
        s = int(rng.integers(n))
        if s == t:
            counter.record_target(t)
            continue
        oracle = ComparisonOracle(space, oracle_cfg,
                                  rng=substream(seed, "oracle", slot))
        out = greedy_content_search(policy, oracle, s, t, cap,
                                    substream(seed, "policy", slot))
        if out.terminated is Terminated.CAP_EXCEEDED:
            cap_exceeded += 1
        costs[i] = out.cost
        counter.record_target(t)
        flush_history(stores[t], out.trace, t)
    return AdaptiveRun(counter, stores, policy, costs, cap_exceeded)


# -- learned-state snapshots -------------------------------------------


def dump_state(counter: TargetCounter, stores: list[OrderStore]) -> str:
    """Reloadable text snapshot of counters and raw constraint edges.

    The collapsed classes are not stored: they are a pure function of the
    constraint set, so replaying the edges reproduces them exactly.
    """
    payload = {
        "n": counter.n,
        "mode": counter.mode,
        "alpha": counter.alpha,
        "timeslots": counter.timeslots,
        "counts": counter.counts.tolist(),
        "ema": counter._ema.tolist() if counter.mode == "ema" else None,
        "stores": {
            str(store.reference): sorted(store.constraints)
            for store in stores if store.constraints
        },
    }
    return json.dumps(payload, sort_keys=True)


def load_state(text: str) -> tuple[TargetCounter, list[OrderStore]]:
    payload = json.loads(text)
    n = payload["n"]
    counter = TargetCounter(n, mode=payload["mode"], alpha=payload["alpha"])
    counter.timeslots = payload["timeslots"]
    counter.counts = np.array(payload["counts"], dtype=float)
    if payload.get("ema") is not None:
        counter._ema = np.array(payload["ema"], dtype=float)
    stores = [OrderStore(n, x) for x in range(n)]
    for ref, edges in payload["stores"].items():
        store = stores[int(ref)]
        for u, v in edges:
            store.add(int(u), int(v))
    return counter, stores
