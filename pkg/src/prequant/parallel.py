"""Deterministic data-parallel fan-out over batches of sample points."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 16
ENV_VAR = "PREQUANT_THREADS"


def thread_cap():
    """Worker cap from PREQUANT_THREADS (positive integer), default min(4, cpus)."""
    raw = os.environ.get(ENV_VAR)
    if raw is None or raw == "":
        return max(1, min(4, os.cpu_count() or 1))
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_VAR} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"{ENV_VAR} must be a positive integer, got {raw!r}")
    return value


def fan_out(fn, *arrays, threads=None):
    """Apply fn to fixed-size row chunks and concatenate the results.

    Chunk boundaries do not depend on the thread count, so results are
    identical for any PREQUANT_THREADS value.
    """
    m = len(arrays[0])
    bounds = [(i, min(i + CHUNK, m)) for i in range(0, m, CHUNK)]
    jobs = [tuple(a[i:j] for a in arrays) for i, j in bounds]
    workers = threads or thread_cap()
    if workers == 1 or len(jobs) == 1:
        parts = [fn(*job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: fn(*job), jobs))
    return np.concatenate([np.asarray(p) for p in parts], axis=0)
