"""Deterministic per-task random streams.

Every stochastic routine in the package draws from generators derived here,
so batch work can be scheduled in any order (or in parallel) without
changing results: the stream for a task depends only on the master seed and
the task's index key, never on execution order.
"""

from __future__ import annotations

import numpy as np

__all__ = ["check_seed", "task_rng", "task_rngs"]


def check_seed(seed: int) -> int:
    seed = int(seed)
    if seed < 0:
        raise ValueError(f"seeds must be nonnegative integers, got {seed}")
    return seed


def task_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Generator for one task, keyed by (master_seed, *key)."""
    ss = np.random.SeedSequence(entropy=check_seed(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def task_rngs(master_seed: int, start: int, count: int, *prefix: int) -> list:
    """Generators for a contiguous block of task indices."""
    return [task_rng(master_seed, *prefix, i) for i in range(start, start + count)]
