import numpy as np
import pytest

from navsearch.instances import line_space
from navsearch.space import (
    InvalidObjectError,
    MetricError,
    MetricSpace,
    Ordering,
    validate_metric,
    validate_ultrametric,
)


@pytest.fixture
def line():
    return line_space([0, 1, 3])


def test_line_distance(line):
    assert line.distance(0, 2) == 3
    assert line.distance(1, 2) == 2


def test_self_distance_zero(line):
    for x in range(3):
        assert line.distance(x, x) == 0


def test_invalid_id_raises(line):
    with pytest.raises(InvalidObjectError):
        line.distance(0, 3)
    with pytest.raises(InvalidObjectError):
        line.distances_from(-1)


def test_hierarchical_distances():
    # branching 2, depth 2: ids 0..3 are the strings 00,01,10,11
    h = MetricSpace.hierarchical(2, 2)
    assert h.distance(0, 1) == 2   # differ in the last coordinate
    assert h.distance(0, 2) == 4   # differ in the first coordinate
    assert h.distance(0, 3) == 4
    assert h.distance(2, 2) == 0


def test_hierarchical_closer():
    h = MetricSpace.hierarchical(2, 2)
    # z = 00: 01 (distance 2) beats 11 (distance 4)
    assert h.closer(1, 3, 0) is Ordering.X_CLOSER


def test_closer_line(line):
    assert line.closer(1, 0, 2) is Ordering.X_CLOSER   # b closer to c than a
    assert line.closer(0, 1, 2) is Ordering.Y_CLOSER
    assert line.closer(1, 1, 2) is Ordering.TIE


def test_closer_tie_equidistant():
    sp = line_space([0, 2, 1])
    assert sp.closer(0, 1, 2) is Ordering.TIE


def test_matrix_space_validation():
    with pytest.raises(MetricError):
        MetricSpace.from_matrix([[0, 1], [2, 0]])
    with pytest.raises(MetricError):
        MetricSpace.from_matrix([[1, 1], [1, 0]])
    sp = MetricSpace.from_matrix([[0, 1], [1, 0]])
    assert sp.distance(0, 1) == 1


def test_triangle_validation_catches_violation():
    bad = MetricSpace.from_matrix([[0, 1, 5], [1, 0, 1], [5, 1, 0]])
    with pytest.raises(MetricError):
        validate_metric(bad)


def test_triangle_validation_passes_grid():
    from navsearch.smallworld import GridSpec, grid_space
    space, _ = grid_space(GridSpec((5, 5)))
    validate_metric(space)


def test_triangle_validation_sampled_path():
    rng = np.random.default_rng(0)
    space = MetricSpace.from_points(rng.random((600, 2)))
    validate_metric(space, exhaustive_limit=128, samples=20_000)


def test_ultrametric_validation():
    for d, k in [(2, 3), (3, 2), (4, 2)]:
        validate_ultrametric(MetricSpace.hierarchical(d, k))
    # a euclidean cloud is generically not ultrametric
    rng = np.random.default_rng(1)
    cloud = MetricSpace.from_points(rng.random((12, 2)))
    with pytest.raises(MetricError):
        validate_ultrametric(cloud)


def test_integer_geometry_exact_ties():
    sp = line_space([0, 1, 2])
    assert sp.is_integer_valued
    assert sp.equality_tolerance == 0.0


def test_float_geometry_tolerance():
    sp = MetricSpace.from_points([[0.0], [0.5]])
    assert sp.equality_tolerance > 0
