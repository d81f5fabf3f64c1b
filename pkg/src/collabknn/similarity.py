"""
Co-rated cosine similarity and the reveal penalty.

The row-wise functions (``*_rows``) are what the estimator runs; the scalar
functions are thin wrappers over them so both paths agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from collabknn.core import QueryUser, bool_to_mask, mask_to_bool


@dataclass(frozen=True)
class PenaltyMap:
    """
    Nondecreasing map ``psi: [0, 1] -> [0, 1]`` applied to the penalty factor.

    The similarity of a database user is ``psi(p) * S_bar``.
    """

    name: str
    psi: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        grid = np.linspace(0.0, 1.0, 101)
        v = np.asarray(self.psi(grid), dtype=np.float64)
        if v[0] < 0 or v[-1] > 1 or (np.diff(v) < 0).any():
            raise ValueError(f"penalty map {self.name!r} must be nondecreasing from [0,1] into [0,1]")

    def __call__(self, p):
        return self.psi(p)


IDENTITY = PenaltyMap("identity", lambda p: np.asarray(p, dtype=np.float64))
SQRT = PenaltyMap("sqrt", lambda p: np.sqrt(np.asarray(p, dtype=np.float64)))

PENALTY_MAPS = {"identity": IDENTITY, "sqrt": SQRT}


def penalty_map(name: str) -> PenaltyMap:
    try:
        return PENALTY_MAPS[name]
    except KeyError:
        raise ValueError(f"unknown penalty map {name!r}; choose from {sorted(PENALTY_MAPS)}") from None


def corated_set(x, x2) -> frozenset[int]:
    """1-based items rated (nonzero) in both vectors."""
    return bool_to_mask((np.asarray(x) != 0) & (np.asarray(x2) != 0))


def bar_similarity_rows(x: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """
    Co-rated cosine of ``x`` against every row of ``rows``.

    Rows sharing no rated item with ``x`` get 0; no zero norm is ever divided.
    """
    x = np.asarray(x, dtype=np.float64)
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    J = (rows != 0) & (x != 0)
    xj = np.where(J, x, 0.0)
    rj = np.where(J, rows, 0.0)
    num = (xj * rj).sum(axis=1)
    den = np.sqrt((xj * xj).sum(axis=1)) * np.sqrt((rj * rj).sum(axis=1))
    out = np.zeros(rows.shape[0])
    nz = J.any(axis=1)
    out[nz] = num[nz] / den[nz]
    # rounding can push a cosine of proportional vectors just past 1
    return np.minimum(out, 1.0)


def bar_similarity(x, x2) -> float:
    return float(bar_similarity_rows(x, np.asarray(x2)[None, :])[0])


def penalty_rows(reveal: np.ndarray, query_mask: np.ndarray) -> np.ndarray:
    """Fraction of the query items revealed, per row of a boolean reveal matrix."""
    size = int(query_mask.sum())
    if size == 0:
        raise ValueError("query mask must be nonempty")
    reveal = np.atleast_2d(reveal)
    return (reveal & query_mask).sum(axis=1) / size


def penalty(reveal: Iterable[int], query: Iterable[int]) -> float:
    reveal, query = set(reveal), set(query)
    if not query:
        raise ValueError("query mask must be nonempty")
    return len(reveal & query) / len(query)


def masked_rows(raw: np.ndarray, reveal: np.ndarray, query_mask: np.ndarray) -> np.ndarray:
    """Database ratings restricted to ``reveal & query``, zero elsewhere."""
    return np.where(reveal & query_mask, raw, 0.0)


def similarity_rows(
    query: QueryUser, raw: np.ndarray, reveal: np.ndarray, psi: PenaltyMap = IDENTITY
) -> tuple[np.ndarray, np.ndarray]:
    """
    Penalized similarity of the query to every database row.

    Returns ``(similarities, masked)`` where ``masked`` is the matrix of masked
    user vectors the similarities were computed from.
    """
    qm = query.bool_mask()
    masked = masked_rows(raw, reveal, qm)
    p = penalty_rows(reveal, qm)
    return np.asarray(psi(p), dtype=np.float64) * bar_similarity_rows(query.ratings, masked), masked


def similarity(query: QueryUser, user_raw, reveal: Iterable[int], psi: PenaltyMap = IDENTITY) -> float:
    d = query.d
    sims, _ = similarity_rows(query, np.asarray(user_raw, dtype=np.float64)[None, :],
                              mask_to_bool(reveal, d)[None, :], psi)
    return float(sims[0])


def fact1_gap(query: QueryUser, user_star) -> float:
    """
    Distance between the co-rated cosine and ``1 - |z - z_i|^2 / 2`` for the
    normalized query and user directions.  Should be at rounding level.
    """
    xs = np.asarray(user_star, dtype=np.float64)
    if not xs.any():
        raise ValueError("user vector must be nonzero")
    if bool_to_mask(xs != 0) != query.mask:
        raise ValueError("user vector must be supported exactly on the query mask")
    z = query.ratings / math.sqrt(float(np.dot(query.ratings, query.ratings)))
    zi = xs / math.sqrt(float(np.dot(xs, xs)))
    rhs = 1.0 - 0.5 * float(np.sum((z - zi) ** 2))
    return abs(bar_similarity(query.ratings, xs) - rhs)

