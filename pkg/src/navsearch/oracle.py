"""Simulated comparison and proximity oracles.

The oracle knows the target; search code never does. Policies only ever
see oracle answers, which is what lets a human (via the session service)
stand in for the simulated oracle without the search noticing.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np

from .space import MetricSpace, ObjectId, Ordering


class TiePolicy(Enum):
    PROBABILISTIC = "probabilistic"
    DETERMINISTIC_LOWER_ID = "deterministic_lower_id"


@dataclass(frozen=True)
class OracleConfig:
    tie_policy: TiePolicy = TiePolicy.PROBABILISTIC
    p_first: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        if self.tie_policy is TiePolicy.PROBABILISTIC and not (0 < self.p_first < 1):
            raise ValueError("probabilistic ties need 0 < p_first < 1")


@dataclass(frozen=True)
class OracleAnswer:
    winner: ObjectId
    was_tie: bool


class ComparisonOracle:
    """Answers which of two proposals lies closer to a hidden target.

    One instance per search trial: the instance owns its RNG stream and
    must not be queried concurrently.
    """

    def __init__(self, space: MetricSpace, config: OracleConfig | None = None,
                 rng: np.random.Generator | None = None):
        self.space = space
        self.config = config or OracleConfig()
        self.rng = rng if rng is not None else np.random.default_rng(self.config.rng_seed)

    def ask(self, x: ObjectId, y: ObjectId, t: ObjectId) -> OracleAnswer:
        """Closest of {x, y} to t; ties resolved per the tie policy."""
        order = self.space.closer(x, y, t)
        if order is Ordering.X_CLOSER:
            return OracleAnswer(x, False)
        if order is Ordering.Y_CLOSER:
            return OracleAnswer(y, False)
        if self.config.tie_policy is TiePolicy.DETERMINISTIC_LOWER_ID:
            return OracleAnswer(min(x, y), True)
        first = self.rng.random() < self.config.p_first
        return OracleAnswer(x if first else y, True)

    def ask_set(self, candidates: Iterable[ObjectId], t: ObjectId) -> ObjectId:
        """Closest element of a candidate set to t (proximity oracle).

        Implemented as a pairwise fold in the given candidate order, so a
        two-element set consumes exactly the randomness of ask(). The
        result is always a distance minimizer: ties only arise between
        equally close candidates.
        """
        winner: ObjectId | None = None
        for a in candidates:
            if winner is None:
                winner = a
            else:
                winner = self.ask(winner, a, t).winner
        if winner is None:
            raise ValueError("proximity oracle needs a non-empty candidate set")
        return winner
