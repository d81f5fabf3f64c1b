"""
Cosine-type k-nearest-neighbor estimate of a user's rating of the target item.

Only responders (users who rated the target) compete.  Neighbors are the
``k`` responders with the largest penalized similarity, equal similarities
going to the lower user index.  A selected user whose masked vector is zero
keeps its slot but gets weight 0.  With fewer than ``k`` responders every
weight is 0 and the estimate is 0.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from collabknn.core import DatabaseSnapshot, QueryUser
from collabknn.similarity import IDENTITY, PenaltyMap, similarity_rows

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Neighbor:
    user: int  # 1-based
    similarity: float
    weight: float


@dataclass(frozen=True)
class NeighborWeights:
    """The selected neighbors, most similar first."""

    selected: tuple[Neighbor, ...]
    k: int

    @property
    def users(self) -> tuple[int, ...]:
        return tuple(nb.user for nb in self.selected)

    @property
    def total_weight(self) -> float:
        return sum(nb.weight for nb in self.selected)


def top_k(scores: np.ndarray, k: int) -> np.ndarray:
    """
    Positions of the ``k`` largest scores, ties broken by smaller position,
    ordered best first.  Linear-time partition plus a sort of the winners.
    """
    m = scores.shape[0]
    if k >= m:
        cand = np.arange(m)
    else:
        kth = -np.partition(-scores, k - 1)[k - 1]
        above = np.flatnonzero(scores > kth)
        at = np.flatnonzero(scores == kth)[: k - above.shape[0]]
        cand = np.concatenate([above, at])
    # lexsort: last key is primary
    return cand[np.lexsort((cand, -scores[cand]))]


def _select(query: QueryUser, db: DatabaseSnapshot, k: int, psi: PenaltyMap):
    if k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    if query.d != db.d:
        raise ValueError(f"query has {query.d} items but database has {db.d}")
    resp = np.flatnonzero(db.responders)
    if resp.shape[0] < k:
        return resp[:0], np.zeros(0), np.zeros((0, db.d))
    sims, masked = similarity_rows(query, db.raw[resp], db.reveal[resp], psi)
    order = top_k(sims, k)
    return resp[order], sims[order], masked[order]


def select_k_most_similar(
    query: QueryUser, db: DatabaseSnapshot, k: int, psi: PenaltyMap = IDENTITY
) -> NeighborWeights:
    rows, sims, masked = _select(query, db, k, psi)
    nonzero = masked.any(axis=1)
    selected = tuple(
        Neighbor(int(i) + 1, float(s), 1.0 / k if nz else 0.0)
        for i, s, nz in zip(rows, sims, nonzero)
    )
    return NeighborWeights(selected, k)


def estimate(query: QueryUser, db: DatabaseSnapshot, k: int, psi: PenaltyMap = IDENTITY) -> float:
    """
    Predicted target rating for ``query``:

        |x| * sum_i W_i * Y_i / |X_i^(n)|

    over the selected responders, with ``0 * inf = 0`` for zero masked vectors.
    """
    rows, _, masked = _select(query, db, k, psi)
    if rows.shape[0] == 0:
        log.debug("fewer than k=%d responders; estimate is 0", k)
        return 0.0
    norms = np.sqrt((masked * masked).sum(axis=1))
    nz = norms > 0
    terms = db.y[rows[nz]] / norms[nz]
    return query.norm * float(terms.sum()) / k
