"""
Domain types for ratings, masks, query users and database snapshots.

Ratings live in ``{0} U [1, s]`` where 0 means "not rated".  Item indices in
every public mask are 1-based (``{1, ..., d}``); arrays are 0-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

MaskSet = frozenset  # frozenset[int] of 1-based item indices


class InvalidRatingError(ValueError):
    """A rating vector or mask violates the rating-scale constraints."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RatingScale:
    """Maximal rating ``s`` and number of predictor items ``d``."""

    s: float
    d: int

    def __post_init__(self):
        if not self.s > 1:
            raise InvalidRatingError(f"maximal rating s must be > 1, got {self.s}")
        if int(self.d) != self.d or self.d < 1:
            raise InvalidRatingError(f"item count d must be an integer >= 1, got {self.d}")


def rating_vector(values: Iterable[float], s: float, d: int | None = None) -> np.ndarray:
    """
    Validate and freeze a rating vector.

    Every entry must be 0 (unrated) or lie in ``[1, s]``; nothing is clamped.
    """
    x = np.array(values, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidRatingError("rating vector must be one-dimensional")
    if d is not None and x.shape[0] != d:
        raise InvalidRatingError(f"expected {d} ratings, got {x.shape[0]}")
    bad = ~((x == 0) | ((x >= 1) & (x <= s)))
    if bad.any():
        j = int(np.flatnonzero(bad)[0])
        raise InvalidRatingError(f"entry {j + 1} = {x[j]!r} is neither 0 nor in [1, {s}]")
    return _readonly(x)


def mask_set(indices: Iterable[int], d: int) -> frozenset[int]:
    """Build a 1-based item mask, checking it is a subset of ``{1..d}``."""
    m = frozenset(int(j) for j in indices)
    if any(j < 1 or j > d for j in m):
        raise InvalidRatingError(f"mask {sorted(m)} is not a subset of {{1..{d}}}")
    return m


def mask_to_bool(mask: Iterable[int], d: int) -> np.ndarray:
    out = np.zeros(d, dtype=bool)
    for j in mask:
        out[j - 1] = True
    return out


def bool_to_mask(flags: np.ndarray) -> frozenset[int]:
    return frozenset(int(j) + 1 for j in np.flatnonzero(flags))


def support(x: np.ndarray) -> frozenset[int]:
    """1-based indices of the nonzero entries of ``x``."""
    return bool_to_mask(np.asarray(x) != 0)


def apply_mask(raw: np.ndarray, reveal: Iterable[int], query: Iterable[int]) -> np.ndarray:
    """Keep ``raw`` on ``reveal & query`` and zero it elsewhere."""
    raw = np.asarray(raw, dtype=np.float64)
    keep = mask_to_bool(set(reveal) & set(query), raw.shape[0])
    return _readonly(np.where(keep, raw, 0.0))


@dataclass(frozen=True)
class QueryUser:
    """
    The new user: ratings supported exactly on a nonempty mask.

    The norm of the ratings is automatically in ``[1, s * sqrt(d)]``.
    """

    ratings: np.ndarray
    mask: frozenset[int]
    s: float = 10.0

    def __post_init__(self):
        x = rating_vector(self.ratings, self.s)
        object.__setattr__(self, "ratings", x)
        d = x.shape[0]
        object.__setattr__(self, "mask", mask_set(self.mask, d))
        if not self.mask:
            raise InvalidRatingError("query mask must be nonempty")
        if support(x) != self.mask:
            raise InvalidRatingError("query ratings must be nonzero exactly on the query mask")
        nrm = self.norm
        if not (1.0 <= nrm <= self.s * math.sqrt(d) * (1 + 1e-12)):
            raise InvalidRatingError(f"query norm {nrm} outside [1, s*sqrt(d)]")

    @classmethod
    def from_ratings(cls, ratings: Sequence[float], s: float = 10.0) -> "QueryUser":
        """Build a query whose mask is the support of ``ratings``."""
        x = rating_vector(ratings, s)
        return cls(x, support(x), s)

    @property
    def d(self) -> int:
        return self.ratings.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.ratings))

    def bool_mask(self) -> np.ndarray:
        return mask_to_bool(self.mask, self.d)


@dataclass(frozen=True, eq=False)
class DatabaseSnapshot:
    """
    State of the ratings database at time ``n``.

    Row ``i`` (0-based) is user ``i + 1``.  ``raw`` holds the full ratings
    ``X_i``; ``reveal`` flags the items in ``M_i^(n+1-i)``; ``y`` holds the
    target rating, read only where ``responders`` is set.
    """

    raw: np.ndarray
    reveal: np.ndarray
    y: np.ndarray
    responders: np.ndarray
    s: float = 10.0
    n: int = field(init=False)

    def __post_init__(self):
        raw = np.array(self.raw, dtype=np.float64)
        reveal = np.array(self.reveal, dtype=bool)
        y = np.array(self.y, dtype=np.float64)
        resp = np.array(self.responders, dtype=bool)
        if raw.ndim != 2 or reveal.shape != raw.shape:
            raise InvalidRatingError("raw and reveal must be n x d arrays of equal shape")
        n = raw.shape[0]
        if y.shape != (n,) or resp.shape != (n,):
            raise InvalidRatingError("y and responders must have one entry per user")
        if not resp.any():
            raise InvalidRatingError("responder set must be nonempty")
        ok = (raw == 0) | ((raw >= 1) & (raw <= self.s))
        if not ok.all():
            i, j = np.argwhere(~ok)[0]
            raise InvalidRatingError(f"user {i + 1} item {j + 1}: rating {raw[i, j]!r} out of range")
        if (reveal & (raw == 0)).any():
            i, j = np.argwhere(reveal & (raw == 0))[0]
            raise InvalidRatingError(f"user {i + 1} reveals item {j + 1} without a rating")
        yr = y[resp]
        if not ((yr >= 1) & (yr <= self.s)).all():
            raise InvalidRatingError("responder targets must lie in [1, s]")
        for name, a in (("raw", raw), ("reveal", reveal), ("y", y), ("responders", resp)):
            object.__setattr__(self, name, _readonly(a))
        object.__setattr__(self, "n", n)

    @classmethod
    def from_users(
        cls,
        users: Sequence[tuple[Sequence[float], Iterable[int], float | None]],
        responders: Iterable[int],
        s: float = 10.0,
    ) -> "DatabaseSnapshot":
        """
        Build a snapshot from ``(raw_ratings, reveal_mask, y)`` triples and a
        1-based responder set.
        """
        if not users:
            raise InvalidRatingError("snapshot needs at least one user")
        raw = np.array([rating_vector(u[0], s) for u in users])
        d = raw.shape[1]
        reveal = np.array([mask_to_bool(mask_set(u[1], d), d) for u in users])
        resp = np.zeros(len(users), dtype=bool)
        for i in responders:
            if not 1 <= i <= len(users):
                raise InvalidRatingError(f"responder {i} not in 1..{len(users)}")
            resp[i - 1] = True
        y = np.array([np.nan if u[2] is None else u[2] for u in users], dtype=np.float64)
        return cls(raw, reveal, y, resp, s)

    @property
    def d(self) -> int:
        return self.raw.shape[1]

    @property
    def responder_set(self) -> frozenset[int]:
        return bool_to_mask(self.responders)

    def reveal_mask(self, i: int) -> frozenset[int]:
        """Reveal mask of 1-based user ``i``."""
        return bool_to_mask(self.reveal[i - 1])

    def users(self) -> Iterator[tuple[np.ndarray, frozenset[int], float | None]]:
        for i in range(self.n):
            y = float(self.y[i]) if self.responders[i] else None
            yield self.raw[i], bool_to_mask(self.reveal[i]), y
