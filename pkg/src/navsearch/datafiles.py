"""Dataset file format: geometry, optional display payloads, demand pairs.

A dataset file is a JSON document with the keys

    name      -- optional string
    geometry  -- {"kind": "points", "metric": "manhattan"|"euclidean",
                  "coords": [[..], ..]}
               | {"kind": "matrix", "distances": [[..], ..]}
               | {"kind": "hierarchical", "branching": D, "depth": K}
    display   -- optional per-object list of {"kind": "color"|"point",
                  "payload": ...}
    demand    -- {"pairs": [[source_id, target_id, weight], ...]}

Demand weights need not sum to one; the loader normalizes them.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .demand import Demand
from .space import MetricSpace


@dataclass
class Dataset:
    space: MetricSpace
    demand: Demand | None
    name: str = ""
    display: list[dict] = field(default_factory=list)


def dataset_to_dict(ds: Dataset) -> dict:
    space = ds.space
    if space.kind == "points":
        geometry = {"kind": "points", "metric": space.metric,
                    "coords": space.coords().tolist()}
    elif space.kind == "matrix":
        geometry = {"kind": "matrix",
                    "distances": space._matrix.tolist()}
    else:
        geometry = {"kind": "hierarchical", "branching": space.branching,
                    "depth": space.depth}
    doc: dict = {"name": ds.name, "geometry": geometry}
    if ds.display:
        doc["display"] = ds.display
    if ds.demand is not None:
        doc["demand"] = {"pairs": [[s, t, w] for s, t, w in sorted(ds.demand.pairs())]}
    return doc


def dump_dataset(ds: Dataset, path) -> None:
    with open(path, "w") as fh:
        json.dump(dataset_to_dict(ds), fh, sort_keys=True)
        fh.write("\n")


def dataset_from_dict(doc: dict) -> Dataset:
    geo = doc["geometry"]
    kind = geo["kind"]
    if kind == "points":
        space = MetricSpace.from_points(np.asarray(geo["coords"], dtype=float),
                                        metric=geo.get("metric", "euclidean"))
    elif kind == "matrix":
        space = MetricSpace.from_matrix(np.asarray(geo["distances"], dtype=float))
    elif kind == "hierarchical":
        space = MetricSpace.hierarchical(geo["branching"], geo["depth"])
    else:
        raise ValueError(f"unknown geometry kind {kind!r}")
    demand = None
    if "demand" in doc:
        demand = Demand.from_pairs(space.n, [tuple(p) for p in doc["demand"]["pairs"]])
    return Dataset(space=space, demand=demand, name=doc.get("name", ""),
                   display=doc.get("display", []))


def load_dataset(path) -> Dataset:
    with open(path) as fh:
        return dataset_from_dict(json.load(fh))
