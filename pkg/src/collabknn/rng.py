"""
Reproducible random streams.

Every stream is derived from one master seed through numpy's SeedSequence
with spawn key ``(replication, purpose)``.  Within a purpose, user ``i``
(1-based) consumes the fixed-size block of draws number ``i - 1``, so
user-level randomness is addressed by ``(replication, user, purpose)`` and
does not depend on how many users are drawn or in which batch size.
"""

from __future__ import annotations

import numpy as np

PURPOSES = {
    "query": 0,
    "ratings": 1,
    "reveal": 2,
    "responders": 3,
    "oracle": 4,
}


def stream(master_seed: int, replication: int, purpose: str) -> np.random.Generator:
    try:
        pid = PURPOSES[purpose]
    except KeyError:
        raise ValueError(f"unknown stream purpose {purpose!r}") from None
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(replication), pid))
    return np.random.Generator(np.random.PCG64(ss))


def user_blocks(gen: np.random.Generator, n_users: int, width: int) -> np.ndarray:
    """
    Next ``n_users`` blocks of ``width`` uniforms; row ``i`` equals what the
    ``i``-th successive ``gen.random(width)`` call would return.
    """
    return gen.random((n_users, width))
