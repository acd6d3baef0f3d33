"""Finite metric spaces: point clouds, explicit matrices, and the
power-of-two hierarchical rule used by the lower-bound instances."""
from __future__ import annotations

from enum import Enum

import numpy as np

ObjectId = int

DEFAULT_FLOAT_TOLERANCE = 1e-12

# distances_from() cache budget, in floats (~16 MB of float64 rows).
_CACHE_BUDGET = 2_000_000


class Ordering(Enum):
    X_CLOSER = "x_closer"
    Y_CLOSER = "y_closer"
    TIE = "tie"


class InvalidObjectError(ValueError):
    """An object id outside [0, n)."""


class MetricError(ValueError):
    """The supplied geometry violates the metric axioms."""


class MetricSpace:
    """n objects with pairwise distances and the derived closeness order.

    Three geometries are supported:

    * ``points``      -- per-object coordinate vectors with a manhattan or
                         euclidean metric;
    * ``matrix``      -- an explicit symmetric n x n distance matrix;
    * ``hierarchical``-- D-ary strings of length K with distance
                         ``2**(K - j + 1)`` where j is the first (1-based)
                         coordinate at which the strings differ.

    Distance ties are resolved with a relative tolerance for float-valued
    geometries and exactly for integer-valued ones, so that the
    closer-to-``z`` relation is a well-defined total preorder.
    """

    def __init__(self, kind, *, coords=None, metric=None, matrix=None,
                 digits=None, branching=None, equality_tolerance=None):
        self.kind = kind
        self._coords = coords
        self.metric = metric
        self._matrix = matrix
        self._digits = digits
        self.branching = branching
        if kind == "points":
            self._n = int(coords.shape[0])
            self.is_integer_valued = (
                metric == "manhattan"
                and np.allclose(coords, np.round(coords))
            )
        elif kind == "matrix":
            self._n = int(matrix.shape[0])
            self.is_integer_valued = bool(np.allclose(matrix, np.round(matrix)))
        elif kind == "hierarchical":
            self._n = int(digits.shape[0])
            self.depth = int(digits.shape[1])
            self.is_integer_valued = True
        else:
            raise ValueError(f"unknown geometry kind {kind!r}")
        if equality_tolerance is None:
            equality_tolerance = 0.0 if self.is_integer_valued else DEFAULT_FLOAT_TOLERANCE
        self.equality_tolerance = float(equality_tolerance)
        self._row_cache: dict[int, np.ndarray] = {}
        self._cache_cap = max(1, _CACHE_BUDGET // self._n)

    # -- constructors -------------------------------------------------

    @classmethod
    def from_points(cls, coords, metric="euclidean", equality_tolerance=None):
        coords = np.asarray(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        if metric not in ("manhattan", "euclidean"):
            raise ValueError(f"unknown metric tag {metric!r}")
        if coords.shape[0] < 1:
            raise ValueError("need at least one object")
        return cls("points", coords=coords, metric=metric,
                   equality_tolerance=equality_tolerance)

    @classmethod
    def from_matrix(cls, matrix, equality_tolerance=None):
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise MetricError("distance matrix must be square")
        if not np.allclose(m, m.T, rtol=1e-9, atol=1e-12):
            raise MetricError("distance matrix must be symmetric")
        if np.any(np.diag(m) != 0):
            raise MetricError("self-distances must be zero")
        if np.any(m < 0):
            raise MetricError("distances must be non-negative")
        return cls("matrix", matrix=m, equality_tolerance=equality_tolerance)

    @classmethod
    def hierarchical(cls, branching: int, depth: int, size_guard: int = 10**6):
        """All D-ary strings of length K, ultrametric by construction."""
        if branching < 2 or depth < 1:
            raise ValueError("need branching >= 2 and depth >= 1")
        n = branching ** depth
        if n > size_guard:
            raise ValueError(
                f"hierarchical space would hold {n} objects; "
                f"raise size_guard to allow more than {size_guard}")
        ids = np.arange(n)
        digits = np.empty((n, depth), dtype=np.int16)
        for j in range(depth - 1, -1, -1):
            digits[:, j] = ids % branching
            ids = ids // branching
        return cls("hierarchical", digits=digits, branching=branching)

    # -- basic interface ----------------------------------------------

    @property
    def n(self) -> int:
        return self._n

    def check_id(self, x: ObjectId) -> None:
        if not (0 <= x < self._n):
            raise InvalidObjectError(f"object id {x} outside [0, {self._n})")

    def distances_from(self, x: ObjectId) -> np.ndarray:
        """Vector of distances from ``x`` to every object (cached)."""
        self.check_id(x)
        row = self._row_cache.get(x)
        if row is not None:
            return row
        if self.kind == "points":
            delta = self._coords - self._coords[x]
            if self.metric == "manhattan":
                row = np.abs(delta).sum(axis=1)
            else:
                row = np.sqrt((delta * delta).sum(axis=1))
        elif self.kind == "matrix":
            row = self._matrix[x]
        else:
            diff = self._digits != self._digits[x]
            j0 = diff.argmax(axis=1)  # first differing coordinate, 0-based
            row = np.ldexp(1.0, self.depth - j0)
            row[~diff.any(axis=1)] = 0.0
        row.setflags(write=False)
        if len(self._row_cache) >= self._cache_cap:
            self._row_cache.pop(next(iter(self._row_cache)))
        self._row_cache[x] = row
        return row

    def distance(self, x: ObjectId, y: ObjectId) -> float:
        self.check_id(y)
        return float(self.distances_from(x)[y])

    def tie_slack(self, d: float) -> float:
        """Absolute slack under which two distances count as equal."""
        return self.equality_tolerance * max(1.0, d)

    def closer(self, x: ObjectId, y: ObjectId, z: ObjectId) -> Ordering:
        """Which of x, y lies closer to z, with tolerance-based ties."""
        dx = self.distance(x, z)
        dy = self.distance(y, z)
        if abs(dx - dy) <= self.tie_slack(dx):
            return Ordering.TIE
        return Ordering.X_CLOSER if dx < dy else Ordering.Y_CLOSER

    def coords(self) -> np.ndarray:
        if self.kind == "points":
            return self._coords
        if self.kind == "hierarchical":
            return self._digits
        raise ValueError("matrix spaces carry no coordinates")


# -- structural validation --------------------------------------------


def validate_metric(space: MetricSpace, exhaustive_limit: int = 512,
                    samples: int = 200_000, rng=None) -> None:
    """Check symmetry and the triangle inequality.

    Exhaustive (all triples, vectorized per pivot) up to
    ``exhaustive_limit`` objects, randomly sampled triples above.
    Raises :class:`MetricError` on the first violation.
    """
    n = space.n
    slack = 1e-9
    if n <= exhaustive_limit:
        rows = np.stack([space.distances_from(x) for x in range(n)])
        if not np.allclose(rows, rows.T, rtol=1e-9, atol=1e-12):
            raise MetricError("distance symmetry violated")
        if np.any(np.diag(rows) != 0):
            raise MetricError("d(x,x) != 0")
        for y in range(n):
            via = rows[:, y][:, None] + rows[y][None, :]
            bad = rows > via + slack * np.maximum(1.0, via)
            if bad.any():
                x, z = np.argwhere(bad)[0]
                raise MetricError(
                    f"triangle inequality violated for ({x},{y},{z})")
        return
    if rng is None:
        rng = np.random.default_rng(0)
    trip = rng.integers(0, n, size=(samples, 3))
    for x, y, z in trip:
        dxz = space.distance(x, z)
        via = space.distance(x, y) + space.distance(y, z)
        if dxz > via + slack * max(1.0, via):
            raise MetricError(f"triangle inequality violated for ({x},{y},{z})")


def validate_ultrametric(space: MetricSpace) -> None:
    """Check ``d(x,z) <= max(d(x,y), d(y,z))`` for all triples.

    Uses the single-linkage dendrogram equivalence: the space is
    ultrametric iff every pair's distance equals the height at which the
    pair's clusters merge when pairs are swept in ascending distance
    order. Each pair is verified in exactly one merge block, so the
    check covers all triples in O(n^2) comparisons.
    """
    n = space.n
    rows = np.stack([space.distances_from(x) for x in range(n)])
    if not np.allclose(rows, rows.T, rtol=1e-9, atol=1e-12):
        raise MetricError("distance symmetry violated")
    iu, ju = np.triu_indices(n, k=1)
    order = np.argsort(rows[iu, ju], kind="stable")
    parent = list(range(n))
    members: list[list[int]] = [[i] for i in range(n)]

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for k in order:
        i, j, d = int(iu[k]), int(ju[k]), float(rows[iu[k], ju[k]])
        ri, rj = find(i), find(j)
        if ri == rj:
            continue  # pair already verified when its clusters merged
        block = rows[np.ix_(members[ri], members[rj])]
        if not np.allclose(block, d, rtol=1e-9, atol=1e-12):
            raise MetricError(
                f"not ultrametric: clusters of {i} and {j} merge at height {d} "
                "but contain a cross pair at a different distance")
        parent[rj] = ri
        members[ri].extend(members[rj])
        members[rj] = []
