"""Bundled datasets for interactive sessions: a color-swatch lattice
embedded in Lab space and a seeded 2-D point cloud.

Both are built deterministically from fixed constants so that a service
restart always sees byte-identical objects (the persistence log refers to
objects by id).
"""
from __future__ import annotations

import numpy as np

from .datafiles import Dataset
from .demand import Demand
from .space import MetricSpace

_POINTS_SEED = 727  # fixed: dataset identity must survive restarts


def _srgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    """sRGB in [0,1] -> CIELab (D65). Euclidean distance in Lab is the
    usual cheap stand-in for perceptual difference."""
    c = np.where(rgb > 0.04045, ((rgb + 0.055) / 1.055) ** 2.4, rgb / 12.92)
    m = np.array([
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ])
    xyz = c @ m.T
    white = np.array([0.95047, 1.0, 1.08883])
    t = xyz / white
    f = np.where(t > (6 / 29) ** 3, np.cbrt(t), t / (3 * (6 / 29) ** 2) + 4 / 29)
    lab = np.empty_like(xyz)
    lab[:, 0] = 116 * f[:, 1] - 16
    lab[:, 1] = 500 * (f[:, 0] - f[:, 1])
    lab[:, 2] = 200 * (f[:, 1] - f[:, 2])
    return lab


def color_dataset() -> Dataset:
    """5x5x5 RGB lattice, embedded in Lab, uniform demand over all pairs."""
    levels = np.array([0, 64, 128, 192, 255])
    grid = np.stack(np.meshgrid(levels, levels, levels, indexing="ij"),
                    axis=-1).reshape(-1, 3)
    lab = _srgb_to_lab(grid / 255.0)
    space = MetricSpace.from_points(lab, metric="euclidean")
    display = [{"kind": "color", "payload": "#%02x%02x%02x" % tuple(row)}
               for row in grid]
    return Dataset(space=space, demand=Demand.uniform(space.n),
                   name="colors", display=display)


def point_dataset(n: int = 100) -> Dataset:
    """Seeded 2-D point cloud with uniform demand."""
    rng = np.random.default_rng(_POINTS_SEED)
    coords = rng.random((n, 2))
    space = MetricSpace.from_points(coords, metric="euclidean")
    display = [{"kind": "point", "payload": [round(float(x), 4), round(float(y), 4)]}
               for x, y in coords]
    return Dataset(space=space, demand=Demand.uniform(n),
                   name="points", display=display)


def bundled_datasets() -> dict[str, Dataset]:
    return {"colors": color_dataset(), "points": point_dataset()}
