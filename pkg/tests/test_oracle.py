import math

import numpy as np
import pytest

from navsearch.instances import line_space, random_instance
from navsearch.oracle import ComparisonOracle, OracleConfig, TiePolicy


@pytest.fixture
def line():
    return line_space([0, 1, 3])


def test_returns_closer_object(line):
    oracle = ComparisonOracle(line, OracleConfig())
    assert oracle.ask(0, 1, 2).winner == 1  # b beats a toward c
    assert not oracle.ask(0, 1, 2).was_tie


def test_target_always_wins(line):
    oracle = ComparisonOracle(line, OracleConfig())
    for t in range(3):
        for other in range(3):
            if other != t:
                assert oracle.ask(t, other, t).winner == t


def test_invalid_p_first():
    with pytest.raises(ValueError):
        OracleConfig(p_first=0.0)
    with pytest.raises(ValueError):
        OracleConfig(p_first=1.0)


def test_probabilistic_tie_within_3_sigma():
    sp = line_space([0, 2, 1])  # objects 0 and 1 are equidistant from 2
    oracle = ComparisonOracle(sp, OracleConfig(rng_seed=123))
    trials = 100_000
    wins = sum(oracle.ask(0, 1, 2).winner == 0 for _ in range(trials))
    sigma = math.sqrt(trials * 0.25)
    assert abs(wins - trials / 2) <= 3 * sigma


def test_deterministic_tie_lower_id():
    sp = line_space([0, 2, 1])
    cfg = OracleConfig(tie_policy=TiePolicy.DETERMINISTIC_LOWER_ID)
    oracle = ComparisonOracle(sp, cfg)
    ans = oracle.ask(1, 0, 2)
    assert ans.winner == 0 and ans.was_tie


def test_seed_reproducibility():
    sp = line_space([0, 2, 1])
    seqs = []
    for _ in range(2):
        oracle = ComparisonOracle(sp, OracleConfig(rng_seed=999))
        seqs.append([oracle.ask(0, 1, 2).winner for _ in range(200)])
    assert seqs[0] == seqs[1]


def test_consistency_exhaustive_small_space():
    space, _ = random_instance(12, 2, 0.0, seed=5)
    oracle = ComparisonOracle(space, OracleConfig(rng_seed=1))
    for x in range(12):
        for y in range(12):
            for t in range(12):
                w = oracle.ask(x, y, t).winner
                loser = y if w == x else x
                assert space.distance(w, t) <= space.distance(loser, t) + 1e-12


def test_proximity_singleton(line):
    oracle = ComparisonOracle(line, OracleConfig())
    for t in range(3):
        assert oracle.ask_set([1], t) == 1


def test_proximity_empty_set_rejected(line):
    oracle = ComparisonOracle(line, OracleConfig())
    with pytest.raises(ValueError):
        oracle.ask_set([], 0)


def test_proximity_line(line):
    oracle = ComparisonOracle(line, OracleConfig())
    assert oracle.ask_set([0, 1], 2) == 1


def test_proximity_pair_equals_comparison():
    rng = np.random.default_rng(77)
    space, _ = random_instance(20, 2, 0.0, seed=9)
    for trial in range(1000):
        x, y, t = rng.integers(0, 20, size=3)
        seed = int(rng.integers(1 << 31))
        a = ComparisonOracle(space, OracleConfig(rng_seed=seed)).ask(int(x), int(y), int(t)).winner
        b = ComparisonOracle(space, OracleConfig(rng_seed=seed)).ask_set([int(x), int(y)], int(t))
        assert a == b


def test_proximity_always_a_minimizer():
    rng = np.random.default_rng(31)
    space, _ = random_instance(30, 3, 0.0, seed=17)
    oracle = ComparisonOracle(space, OracleConfig(rng_seed=4))
    for _ in range(500):
        k = int(rng.integers(1, 8))
        cand = rng.choice(30, size=k, replace=False)
        t = int(rng.integers(30))
        w = oracle.ask_set([int(c) for c in cand], t)
        dists = [space.distance(int(c), t) for c in cand]
        assert space.distance(w, t) <= min(dists) + 1e-12
