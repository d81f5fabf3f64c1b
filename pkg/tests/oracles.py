"""Independent reference computations used by several test modules."""

import math

import numpy as np

from collabknn.core import DatabaseSnapshot, QueryUser


def euclidean_knn(query: QueryUser, db: DatabaseSnapshot, k: int) -> list[int]:
    """
    k nearest responders by Euclidean distance between normalized query and
    normalized user vectors restricted to the query mask; ties to the lower
    index.  Only meaningful when every responder reveals the whole query mask.
    """
    q = [float(v) for v in query.ratings]
    qn = math.sqrt(sum(v * v for v in q))
    z = [v / qn for v in q]
    scored = []
    for i in range(db.n):
        if not db.responders[i]:
            continue
        xi = [float(db.raw[i, j]) if (j + 1) in query.mask else 0.0 for j in range(db.d)]
        xn = math.sqrt(sum(v * v for v in xi))
        dist = math.sqrt(sum((a - b / xn) ** 2 for a, b in zip(z, xi)))
        scored.append((dist, i + 1))
    scored.sort()
    return [i for _, i in scored[:k]]


def knn_value(query: QueryUser, db: DatabaseSnapshot, users: list[int], k: int) -> float:
    """Average of |x*| Y_i / |X_i*| over the given users, divided by k."""
    total = 0.0
    for i in users:
        xi = np.where(query.bool_mask(), db.raw[i - 1], 0.0)
        total += query.norm * db.y[i - 1] / math.sqrt(float(np.dot(xi, xi)))
    return total / k


def tie_instance(rng: np.random.Generator, s: float = 10.0):
    """
    Random snapshot where every responder's reveal covers the query mask,
    seeded with exact duplicates and power-of-two rescalings to force ties.
    """
    d = int(rng.integers(2, 7))
    m = int(rng.integers(1, d + 1))
    qmask = np.zeros(d, dtype=bool)
    qmask[rng.choice(d, m, replace=False)] = True
    q = QueryUser(np.where(qmask, rng.uniform(1, s, d), 0.0), frozenset(np.flatnonzero(qmask) + 1), s)
    n = int(rng.integers(1, 40))
    raw = rng.uniform(1, s / 2, (n, d))
    base = raw.copy()
    for _ in range(int(rng.integers(0, 4))):
        if n < 2:
            break
        a, b = rng.choice(n, 2, replace=False)
        raw[b] = base[a] * (2.0 if rng.random() < 0.5 else 1.0)
    reveal = rng.random((n, d)) < 0.5
    reveal |= qmask
    resp = rng.random(n) < 0.7
    resp[int(rng.integers(n))] = True
    y = rng.uniform(1, s, n)
    db = DatabaseSnapshot(raw, reveal, np.where(resp, y, np.nan), resp, s)
    k = int(rng.integers(1, int(resp.sum()) + 1))
    return q, db, k
