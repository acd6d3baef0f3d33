"""Demand distributions over (source, target) pairs and their marginals."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .space import ObjectId

PROB_ATOL = 1e-9


class DistributionError(ValueError):
    pass


@dataclass(frozen=True)
class Distribution:
    """Probability distribution over the n objects, stored densely."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        if p.ndim != 1 or p.size == 0:
            raise DistributionError("need a non-empty probability vector")
        if np.any(p < 0):
            raise DistributionError("negative probability")
        if abs(p.sum() - 1.0) > PROB_ATOL:
            raise DistributionError(f"probabilities sum to {p.sum()}, not 1")

    @property
    def n(self) -> int:
        return int(self.probs.size)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > 0)

    def mass(self, x: ObjectId) -> float:
        return float(self.probs[x])

    def sample(self, rng: np.random.Generator, size=None):
        return rng.choice(self.n, size=size, p=self.probs)

    # -- constructors ---------------------------------------------------

    @classmethod
    def uniform(cls, n: int) -> "Distribution":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def point_mass(cls, n: int, x: ObjectId) -> "Distribution":
        p = np.zeros(n)
        p[x] = 1.0
        return cls(p)

    @classmethod
    def from_weights(cls, weights) -> "Distribution":
        """Normalize arbitrary non-negative weights (they need not sum to 1)."""
        w = np.asarray(weights, dtype=float)
        total = w.sum()
        if total <= 0:
            raise DistributionError("weights must have positive total")
        return cls(w / total)

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[tuple[ObjectId, float]]) -> "Distribution":
        w = np.zeros(n)
        for x, p in pairs:
            w[x] += p
        return cls.from_weights(w)

    @classmethod
    def zipf(cls, n: int, exponent: float, perm=None) -> "Distribution":
        """Zipf-skewed masses 1/k**exponent assigned along ``perm``."""
        w = 1.0 / np.arange(1, n + 1, dtype=float) ** exponent
        if perm is not None:
            out = np.empty(n)
            out[np.asarray(perm)] = w
            w = out
        return cls.from_weights(w)


def entropy(sigma: Distribution) -> float:
    """Shannon entropy of the distribution, in bits."""
    p = sigma.probs[sigma.probs > 0]
    if p.size == 0:
        raise DistributionError("empty support")
    return float(-(p * np.log2(p)).sum())


def max_entropy(sigma: Distribution) -> float:
    """max over the support of log2(1/p); never below entropy()."""
    p = sigma.probs[sigma.probs > 0]
    if p.size == 0:
        raise DistributionError("empty support")
    return float(-np.log2(p.min()))


class Demand:
    """Joint distribution over ordered (source, target) pairs.

    Backed either by an explicit sparse pair map or, for product demands
    nu x mu, by the two factors (avoids materializing n^2 entries).
    Weights are normalized on construction.
    """

    def __init__(self, n: int, *, pair_map=None, nu=None, mu=None):
        self.n = n
        self._pair_map = pair_map
        self._nu = nu
        self._mu = mu

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[tuple[ObjectId, ObjectId, float]]) -> "Demand":
        pm: dict[tuple[int, int], float] = {}
        total = 0.0
        for s, t, w in pairs:
            if w < 0:
                raise DistributionError("negative demand weight")
            if not (0 <= s < n and 0 <= t < n):
                raise DistributionError(f"pair ({s},{t}) outside object range")
            if w > 0:
                pm[(int(s), int(t))] = pm.get((int(s), int(t)), 0.0) + float(w)
                total += w
        if total <= 0:
            raise DistributionError("demand weights must have positive total")
        return cls(n, pair_map={k: v / total for k, v in pm.items()})

    @classmethod
    def product(cls, nu: Distribution, mu: Distribution) -> "Demand":
        if nu.n != mu.n:
            raise DistributionError("marginals must share the object set")
        return cls(nu.n, nu=nu, mu=mu)

    @classmethod
    def uniform(cls, n: int) -> "Demand":
        u = Distribution.uniform(n)
        return cls.product(u, u)

    @property
    def is_product(self) -> bool:
        return self._pair_map is None

    def pairs(self) -> Iterator[tuple[ObjectId, ObjectId, float]]:
        if self._pair_map is not None:
            for (s, t), w in self._pair_map.items():
                yield s, t, w
        else:
            for s in range(self.n):
                ps = self._nu.probs[s]
                if ps == 0:
                    continue
                for t in range(self.n):
                    pt = self._mu.probs[t]
                    if pt > 0:
                        yield s, t, ps * pt

    def mass(self, s: ObjectId, t: ObjectId) -> float:
        if self._pair_map is not None:
            return self._pair_map.get((s, t), 0.0)
        return float(self._nu.probs[s] * self._mu.probs[t])

    def total(self) -> float:
        if self._pair_map is not None:
            return float(math.fsum(self._pair_map.values()))
        return float(self._nu.probs.sum() * self._mu.probs.sum())

    def all_pairs_positive(self) -> bool:
        """True iff every ordered pair (including s == t) has positive mass."""
        if self._pair_map is not None:
            return len(self._pair_map) == self.n * self.n
        return bool(np.all(self._nu.probs > 0) and np.all(self._mu.probs > 0))

    def sample(self, rng: np.random.Generator, size: int):
        """Draw ``size`` (source, target) pairs; returns two int arrays."""
        if self._pair_map is not None:
            keys = sorted(self._pair_map)
            w = np.array([self._pair_map[k] for k in keys])
            idx = rng.choice(len(keys), size=size, p=w / w.sum())
            st = np.array(keys, dtype=int)[idx]
            return st[:, 0], st[:, 1]
        s = self._nu.sample(rng, size)
        t = self._mu.sample(rng, size)
        return s, t


def marginals(demand: Demand) -> tuple[Distribution, Distribution]:
    """Source and target marginals (nu, mu) as exact row/column sums."""
    if demand.is_product:
        return demand._nu, demand._mu
    nu = np.zeros(demand.n)
    mu = np.zeros(demand.n)
    for s, t, w in demand.pairs():
        nu[s] += w
        mu[t] += w
    return Distribution(nu), Distribution(mu)
