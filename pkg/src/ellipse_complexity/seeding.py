"""Deterministic normal variates keyed by integer tuples.

Each key such as ``(base_seed, sigma_index, replicate)`` selects an
independent Philox (counter-based) stream; coordinate ``j`` of a draw is the
``j``-th variate of that stream. Results therefore do not depend on the order
or parallelism in which keys are consumed.
"""

from __future__ import annotations

import numpy as np


def generator(*key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) for k in key])))


def normal_vector(d: int, *key: int) -> np.ndarray:
    return generator(*key).standard_normal(d)


def normal_rows(n: int, d: int, *prefix: int) -> np.ndarray:
    """Stack ``normal_vector(d, *prefix, i)`` for ``i = 0..n-1``."""
    out = np.empty((n, d))
    for i in range(n):
        out[i] = normal_vector(d, *prefix, i)
    return out
