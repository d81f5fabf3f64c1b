"""
Sequential reveal simulator.

Users enter one per time step.  At time ``n`` user ``i`` shows the mask
``M_i^(n+1-i)``, the ``(n+1-i)``-th element of its own monotone reveal
sequence.  Separately, the responder set ``R_n`` (users who rated the target
item) grows according to a responder process.

Each user's reveal sequence is fixed at entry by one block of ``d`` uniforms:
their argsort is a uniformly random item order and the mask at age ``a`` is
the first ``size(a)`` items of that order.  For the 4+1 process this gives a
uniform 4-subset first, then one uniformly chosen unrated item per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Literal

import numpy as np

from collabknn.core import DatabaseSnapshot, mask_to_bool
from collabknn.rng import stream

RevealKind = Literal["all_at_once", "incremental_4_plus_1", "uniform_batch"]
ResponderKind = Literal["all", "bernoulli_growth"]


@dataclass(frozen=True)
class RevealProcess:
    """
    How a user's rated set grows.

    ``uniform_batch(b0, b)`` is not one of the two processes analysed for
    rates; it generalizes the 4+1 process for experiments.
    """

    kind: RevealKind
    b0: int = 4
    b: int = 1

    def __post_init__(self):
        if self.kind not in ("all_at_once", "incremental_4_plus_1", "uniform_batch"):
            raise ValueError(f"unknown reveal process {self.kind!r}")
        if self.kind == "incremental_4_plus_1":
            object.__setattr__(self, "b0", 4)
            object.__setattr__(self, "b", 1)
        if self.b0 < 1 or self.b < 1:
            raise ValueError("uniform_batch needs b0 >= 1 and b >= 1")

    def validate(self, d: int) -> None:
        if self.kind != "all_at_once" and self.b0 > d:
            raise ValueError(f"{self.kind} reveals {self.b0} items first but d = {d}")

    def first_size(self, d: int) -> int:
        return self.size_at(1, d)

    def size_at(self, age: int, d: int) -> int:
        """Number of items revealed at ``age`` (1 = entry time)."""
        if self.kind == "all_at_once":
            return d
        return min(d, self.b0 + (age - 1) * self.b)

    def full_age(self, d: int) -> int:
        """Smallest age at which every item is revealed."""
        if self.kind == "all_at_once" or self.b0 >= d:
            return 1
        return 1 + math.ceil((d - self.b0) / self.b)

    @staticmethod
    def order(block: np.ndarray) -> np.ndarray:
        return np.argsort(block, kind="stable")

    def mask_at(self, order: np.ndarray, age: int) -> frozenset[int]:
        size = self.size_at(age, order.shape[0])
        return frozenset(int(j) + 1 for j in order[:size])

    def sequence(self, block: np.ndarray) -> Iterator[frozenset[int]]:
        """The user's masks at ages 1, 2, ...; constant once full."""
        order = self.order(block)
        age = 1
        while True:
            yield self.mask_at(order, age)
            age += 1

    def matrix(self, blocks: np.ndarray, ages: np.ndarray) -> np.ndarray:
        """Boolean reveal matrix for users with the given blocks and ages."""
        n, d = blocks.shape
        ranks = np.argsort(np.argsort(blocks, axis=1, kind="stable"), axis=1, kind="stable")
        sizes = np.array([self.size_at(int(a), d) for a in ages])
        return ranks < sizes[:, None]


@dataclass(frozen=True)
class ResponderProcess:
    """
    Growth law of the responder set.  ``bernoulli_growth``: start from
    ``{1}``; at each later step, with probability ``p`` add one user drawn
    uniformly among those not yet responding.
    """

    kind: ResponderKind
    p: float = 1.0

    def __post_init__(self):
        if self.kind not in ("all", "bernoulli_growth"):
            raise ValueError(f"unknown responder process {self.kind!r}")
        if self.kind == "bernoulli_growth" and not 0 < self.p <= 1:
            raise ValueError(f"bernoulli_growth needs 0 < p <= 1, got {self.p}")

    def advance(self, responders: set[int], n: int, gen: np.random.Generator) -> None:
        """Grow ``responders`` in place from time ``n - 1`` to time ``n``."""
        if n == 1:
            responders.add(1)
            return
        if self.kind == "all":
            responders.add(n)
            return
        if gen.random() < self.p:
            # {1..n} minus R_{n-1} always contains n
            while True:
                j = int(gen.integers(1, n + 1))
                if j not in responders:
                    responders.add(j)
                    return

    def run(self, n: int, gen: np.random.Generator) -> set[int]:
        r: set[int] = set()
        for t in range(1, n + 1):
            self.advance(r, t, gen)
        return r

    def mean_size(self, n: int) -> float:
        return float(n) if self.kind == "all" else 1 + (n - 1) * self.p


class Simulator:
    """
    Step-by-step state of the sequential model (masks stored eagerly).

    New users' ratings come from outside; the simulator only draws masks and
    responders.  ``check=True`` asserts mask monotonicity on every step.
    """

    def __init__(
        self,
        d: int,
        reveal: RevealProcess,
        responders: ResponderProcess,
        master_seed: int = 0,
        replication: int = 0,
        check: bool = False,
    ):
        reveal.validate(d)
        self.d = d
        self.reveal = reveal
        self.responder_process = responders
        self.check = check
        self.n = 0
        self.masks: list[frozenset[int]] = []
        self.ratings: list[np.ndarray] = []
        self.y: list[float] = []
        self.responders: set[int] = set()
        self._orders: list[np.ndarray] = []
        self._reveal_gen = stream(master_seed, replication, "reveal")
        self._resp_gen = stream(master_seed, replication, "responders")

    def step(self, new_user: tuple[np.ndarray, float]) -> "Simulator":
        """Advance one time unit: age every user, add ``new_user``, grow responders."""
        self.n += 1
        n = self.n
        for i in range(n - 1):
            new = self.reveal.mask_at(self._orders[i], n - i)
            if self.check:
                assert self.masks[i] <= new, f"user {i + 1} lost ratings at time {n}"
            self.masks[i] = new
        order = self.reveal.order(self._reveal_gen.random(self.d))
        self._orders.append(order)
        self.masks.append(self.reveal.mask_at(order, 1))
        raw, y = new_user
        self.ratings.append(np.asarray(raw, dtype=np.float64))
        self.y.append(float(y))
        before = set(self.responders)
        self.responder_process.advance(self.responders, n, self._resp_gen)
        if self.check:
            assert before <= self.responders <= set(range(1, n + 1))
        return self

    def mask(self, i: int) -> frozenset[int]:
        """Current mask of 1-based user ``i``."""
        return self.masks[i - 1]

    def sequence(self, i: int) -> Iterator[frozenset[int]]:
        order = self._orders[i - 1]
        age = 1
        while True:
            yield self.reveal.mask_at(order, age)
            age += 1

    def snapshot(self, s: float = 10.0) -> DatabaseSnapshot:
        reveal = np.array([mask_to_bool(m, self.d) for m in self.masks])
        y = np.array(self.y)
        resp = np.zeros(self.n, dtype=bool)
        resp[[i - 1 for i in self.responders]] = True
        return DatabaseSnapshot(np.array(self.ratings), reveal, np.where(resp, y, np.nan), resp, s)


def first_full_time(sequence: Iterable[frozenset[int]], entry: int, query_mask: Iterable[int]) -> int:
    """
    First time ``T >= entry`` at which the user's mask contains ``query_mask``.

    ``sequence`` yields the user's masks at ages 1, 2, ...; it must eventually
    cover every item, which bounds the search.
    """
    q = frozenset(query_mask)
    for age, m in enumerate(sequence, start=1):
        if q <= m:
            return entry + age - 1
    raise ValueError("reveal sequence ended before covering the query mask")


def diag_Ln(sim: Simulator, query_mask: Iterable[int]) -> frozenset[int]:
    """Responders whose current mask already covers ``query_mask``."""
    q = frozenset(query_mask)
    return frozenset(i for i in sim.responders if q <= sim.mask(i))


def alpha_exact(n: int, i: int, d: int) -> Fraction:
    """
    Probability that user ``i``'s mask at time ``n`` misses part of a uniform
    4-item query mask, under the 4+1 process.
    """
    if d < 5:
        raise ValueError(f"closed form needs d >= 5, got {d}")
    if not 1 <= i <= n:
        raise ValueError(f"need 1 <= i <= n, got i={i}, n={n}")
    if i <= n - d + 4:
        return Fraction(0)
    return 1 - Fraction(math.comb(d - 4, n - i), math.comb(d, n + 4 - i))


def alpha_closed_form(n: int, i: int, d: int) -> float:
    return float(alpha_exact(n, i, d))
