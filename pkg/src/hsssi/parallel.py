"""Deterministic splitting of replica work across threads.

Work item ``k`` always draws from ``rng.child(k)``, so results do not depend
on how the items are split; blocks are concatenated in order.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def worker_count(workers=None):
    """``workers`` if given, else ``$HSSSI_THREADS``, else the CPU count."""
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("HSSSI_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"HSSSI_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def blocks(n, workers):
    edges = np.linspace(0, n, min(workers, max(n, 1)) + 1).astype(int)
    return [(int(a), int(b - a)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _merge(parts):
    if isinstance(parts[0], dict):
        return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}
    return np.concatenate(parts)


def map_blocks(fn, n, workers=None):
    """``fn(start, count)`` over contiguous blocks of ``range(n)``, merged in order.

    ``fn`` returns an array (stacked along axis 0) or a dict of such arrays.
    """
    w = worker_count(workers)
    bl = blocks(n, w)
    if len(bl) <= 1:
        return fn(0, n)
    with ThreadPoolExecutor(max_workers=len(bl)) as ex:
        parts = list(ex.map(lambda b: fn(*b), bl))
    return _merge(parts)
