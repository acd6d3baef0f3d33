"""Deterministic RNG stream derivation.

Every experiment derives all of its randomness from a single master seed.
Named sub-streams (instance, shortcuts, oracle, ...) are statistically
independent by construction, so one component can be re-seeded or varied
without perturbing the draws seen by the others.
"""
from __future__ import annotations

import numpy as np

# Stable stream ids. Never renumber; only append.
_STREAMS = {
    "instance": 0,
    "shortcuts": 1,
    "oracle": 2,
    "policy": 3,
    "demand": 4,
    "learning": 5,
    "session": 6,
}


def substream(master_seed: int, name: str, *index: int) -> np.random.Generator:
    """Generator for the named sub-stream of ``master_seed``.

    Extra integer indices select per-trial / per-slot children of the
    stream, e.g. ``substream(seed, "oracle", trial)``.
    """
    try:
        key = _STREAMS[name]
    except KeyError:
        raise KeyError(f"unknown rng stream {name!r}") from None
    seq = np.random.SeedSequence(master_seed, spawn_key=(key, *index))
    return np.random.default_rng(seq)


def stream_names() -> tuple[str, ...]:
    return tuple(_STREAMS)
