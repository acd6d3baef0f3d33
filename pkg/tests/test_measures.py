import numpy as np
import pytest

from navsearch.demand import Distribution
from navsearch.instances import line_space, random_instance
from navsearch.measures import (
    RankTable,
    ball_mass,
    doubling_constant,
    doubling_constant_bruteforce,
    rank,
)
from navsearch.smallworld import GridSpec, grid_space


def brute_ball_mass(sigma, space, x, r):
    """Independent oracle: direct sum over the definition."""
    return sum(sigma.probs[y] for y in range(space.n)
               if space.distance(x, y) <= r + space.tie_slack(r))


@pytest.fixture
def line():
    return line_space([0, 1, 3])


@pytest.fixture
def uniform3():
    return Distribution.uniform(3)


def test_ball_point_mass():
    sp = line_space([0, 5])
    d = Distribution.point_mass(2, 0)
    for r in (0.0, 0.1, 2.0, 10.0):
        assert ball_mass(d, sp, 0, r) == 1.0


def test_ball_line(line, uniform3):
    assert ball_mass(uniform3, line, 0, 1) == pytest.approx(2 / 3)


def test_ball_negative_radius(line, uniform3):
    with pytest.raises(ValueError):
        ball_mass(uniform3, line, 0, -0.5)


def test_ball_grid_center():
    space, _ = grid_space(GridSpec((3, 3)))
    mu = Distribution.uniform(9)
    center = 4
    expected = brute_ball_mass(mu, space, center, 1)  # 5 lattice points
    assert expected == pytest.approx(5 / 9)
    assert ball_mass(mu, space, center, 1) == pytest.approx(expected)


def test_rank_line(line, uniform3):
    assert rank(uniform3, line, 0, 1) == pytest.approx(2 / 3)
    assert rank(uniform3, line, 0, 2) == pytest.approx(1.0)


def test_rank_two_points():
    sp = line_space([0, 1])
    mu = Distribution.uniform(2)
    assert rank(mu, sp, 0, 1) == 1.0


def test_rank_includes_own_mass():
    rng = np.random.default_rng(3)
    for _ in range(10):
        n = int(rng.integers(2, 30))
        space, demand = random_instance(n, 2, float(rng.random()), int(rng.integers(1e6)))
        from navsearch.demand import marginals
        _, mu = marginals(demand)
        for x in range(n):
            assert rank(mu, space, x, x) >= mu.mass(x) - 1e-12


def test_rank_monotone_in_distance():
    rng = np.random.default_rng(7)
    for seed in range(5):
        n = int(rng.integers(4, 128))
        space, demand = random_instance(n, 2, 0.8, seed)
        from navsearch.demand import marginals
        _, mu = marginals(demand)
        for x in rng.integers(0, n, size=5):
            row = space.distances_from(int(x))
            ranks = RankTable(mu, space, int(x)).all_ranks()
            order = np.argsort(row)
            assert np.all(np.diff(ranks[order]) >= -1e-12)


def test_ball_monotone_and_right_continuous(line, uniform3):
    table = RankTable(uniform3, line, 0)
    radii = np.unique(np.concatenate([table.sorted_d, table.sorted_d / 2]))
    masses = table.ball_masses(radii)
    assert np.all(np.diff(masses) >= 0)
    eps = 1e-9
    just_after = table.ball_masses(radii + eps)
    assert np.allclose(masses, just_after)


def test_doubling_point_mass():
    sp = line_space([0, 4, 9])
    assert doubling_constant(Distribution.point_mass(3, 1), sp) == 1.0


def test_doubling_two_points():
    sp = line_space([0, 1])
    assert doubling_constant(Distribution.uniform(2), sp) == 2.0


def test_doubling_line_brute_force_agrees(line, uniform3):
    # worst ratio sits at x = c, r = 1.5
    exact = doubling_constant(uniform3, line)
    assert exact == 3.0
    assert doubling_constant_bruteforce(uniform3, line) == exact


def test_doubling_cube_at_most_8():
    space, _ = grid_space(GridSpec((4, 4, 4)))
    mu = Distribution.uniform(64)
    c = doubling_constant(mu, space)
    assert c <= 8.0
    assert c == doubling_constant_bruteforce(mu, space)


def test_doubling_critical_equals_dense_sweep():
    rng = np.random.default_rng(11)
    for seed in range(12):
        n = int(rng.integers(4, 64))
        space, demand = random_instance(n, int(rng.integers(1, 4)),
                                        float(1.5 * rng.random()), 1000 + seed)
        from navsearch.demand import marginals
        _, mu = marginals(demand)
        exact = doubling_constant(mu, space)
        dense = doubling_constant_bruteforce(mu, space)
        assert dense <= exact + 1e-12
        assert exact == pytest.approx(dense, rel=0, abs=0)


def test_doubling_at_least_one():
    rng = np.random.default_rng(13)
    for seed in range(5):
        space, demand = random_instance(10, 2, 0.5, seed)
        from navsearch.demand import marginals
        _, mu = marginals(demand)
        assert doubling_constant(mu, space) >= 1.0
