"""Shared helpers: worker-count policy, seeded streams, canonical JSON."""

from __future__ import annotations

import json
import os

import numpy as np

THREADS_ENV = "YOSIDA_LAB_THREADS"


def worker_count() -> int:
    """Worker cap for grid/sample fan-out; YOSIDA_LAB_THREADS overrides."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, min(n, os.cpu_count() or 1))


def substream(seed: int, *indices: int) -> np.random.Generator:
    """Independent generator derived from (seed, indices).

    Per-sample streams keep results identical no matter how the samples are
    scheduled.
    """
    return np.random.default_rng([int(seed), *[int(i) for i in indices]])


def canonical_json(obj) -> str:
    """Deterministic JSON text: sorted keys, repr-exact floats, no spaces."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def as_float_list(arr) -> list:
    return [float(v) for v in np.asarray(arr).ravel()]
