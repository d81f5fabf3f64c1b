"""
Monte Carlo error of the estimator and log-log convergence-rate fits.

One replication draws a query mask from the entry-mask law, a query and
``n`` database users from the model (targets relative to the query mask),
each user's reveal state at time ``n`` and the responder set ``R_n``, then
scores ``|eta_n(x*) - eta(x*)|``.  Replications are independent; results are
aggregated in replication order so they do not depend on ``workers``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

from collabknn.core import DatabaseSnapshot, QueryUser, mask_set
from collabknn.estimator import estimate
from collabknn.model import RatingModel, query_from
from collabknn.reveal import ResponderProcess, RevealProcess
from collabknn.rng import stream
from collabknn.similarity import IDENTITY, PenaltyMap

Metric = Literal["l1", "l2"]


@dataclass(frozen=True)
class KSchedule:
    """Neighbor count ``k(n) = max(1, rnd(c * n**gamma))``, capped at ``n``."""

    c: float = 1.0
    gamma: float = 0.5
    rounding: Literal["round", "ceil"] = "round"

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"schedule constant c must be positive, got {self.c}")
        if not 0 < self.gamma < 1:
            raise ValueError(f"schedule exponent gamma must lie in (0, 1), got {self.gamma}")
        if self.rounding not in ("round", "ceil"):
            raise ValueError(f"unknown rounding {self.rounding!r}")

    def __call__(self, n: int) -> int:
        v = self.c * n**self.gamma
        k = math.ceil(v) if self.rounding == "ceil" else round(v)
        return max(1, min(n, int(k)))

    @classmethod
    def full_ratings(cls, d: int) -> "KSchedule":
        """``k ~ n^(2/(d+1))``: every user rates every item on entry."""
        return cls(1.0, 2.0 / (d + 1), "ceil")

    @classmethod
    def incremental(cls) -> "KSchedule":
        """``k ~ n^(2/5)``: 4+1 reveal process with Bernoulli responders."""
        return cls(1.0, 2.0 / 5.0, "ceil")


@dataclass(frozen=True)
class Experiment:
    model: RatingModel
    reveal: RevealProcess
    responders: ResponderProcess
    master_seed: int = 0
    psi: PenaltyMap = IDENTITY
    metric: Metric = "l1"
    fixed_query_mask: frozenset[int] | None = None

    def __post_init__(self):
        d = self.model.scale.d
        self.reveal.validate(d)
        if self.metric not in ("l1", "l2"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.fixed_query_mask is not None:
            m = mask_set(self.fixed_query_mask, d)
            if not m:
                raise ValueError("fixed query mask must be nonempty")
            object.__setattr__(self, "fixed_query_mask", m)
        size = len(self.fixed_query_mask) if self.fixed_query_mask else self.reveal.first_size(d)
        check = getattr(self.model, "check_feasible", None)
        if check is not None:
            check(size)

    @property
    def d(self) -> int:
        return self.model.scale.d


def draw_query(exp: Experiment, replication: int) -> QueryUser:
    d = exp.d
    g = stream(exp.master_seed, replication, "query")
    order = exp.reveal.order(g.random(d))
    mask = exp.fixed_query_mask or exp.reveal.mask_at(order, 1)
    return query_from(exp.model, mask, g.random(d + 1))


def simulate_replication(exp: Experiment, n: int, replication: int) -> tuple[QueryUser, DatabaseSnapshot]:
    """Query and time-``n`` database for one replication."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    d = exp.d
    seed = exp.master_seed
    query = draw_query(exp, replication)
    X, y = exp.model.draw_users(query.bool_mask(), stream(seed, replication, "ratings").random((n, d + 1)))
    ages = np.arange(n, 0, -1)  # user i is n + 1 - i time units old
    reveal = exp.reveal.matrix(stream(seed, replication, "reveal").random((n, d)), ages)
    r = exp.responders.run(n, stream(seed, replication, "responders"))
    resp = np.zeros(n, dtype=bool)
    resp[np.fromiter(r, dtype=np.int64) - 1] = True
    db = DatabaseSnapshot(X, reveal, np.where(resp, y, np.nan), resp, exp.model.scale.s)
    return query, db


def replication_error(exp: Experiment, n: int, k: int, replication: int) -> float:
    query, db = simulate_replication(exp, n, replication)
    err = estimate(query, db, k, exp.psi) - exp.model.true_eta(query)
    return abs(err) if exp.metric == "l1" else err * err


@dataclass(frozen=True)
class ErrorEstimate:
    mean: float
    std_err: float
    errors: np.ndarray = field(repr=False)

    @property
    def replications(self) -> int:
        return self.errors.shape[0]


def l1_error(
    exp: Experiment,
    n: int,
    k: int,
    replications: int,
    start: int = 0,
    workers: int = 1,
) -> ErrorEstimate:
    """
    Mean and standard error of the per-replication error over replications
    ``start, ..., start + replications - 1`` (squared error when the metric
    is ``l2``).
    """
    if replications < 2:
        raise ValueError("need at least 2 replications")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    idx = range(start, start + replications)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            errs = list(pool.map(lambda r: replication_error(exp, n, k, r), idx))
    else:
        errs = [replication_error(exp, n, k, r) for r in idx]
    e = np.array(errs)
    return ErrorEstimate(float(e.mean()), float(e.std(ddof=1) / math.sqrt(e.shape[0])), e)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float


def rate_fit(points: Iterable[tuple[float, float]]) -> RateFit:
    """Least-squares line through ``(ln n, ln err)``."""
    pts = list(points)
    if len(pts) < 2:
        raise ValueError("rate fit needs at least 2 points")
    n = np.array([p[0] for p in pts], dtype=np.float64)
    err = np.array([p[1] for p in pts], dtype=np.float64)
    if (n <= 0).any() or (err <= 0).any():
        raise ValueError("rate fit needs positive n and positive errors")
    if np.unique(n).shape[0] < 2:
        raise ValueError("rate fit needs at least two distinct n")
    lx, ly = np.log(n), np.log(err)
    xc = lx - lx.mean()
    slope = float((xc * (ly - ly.mean())).sum() / (xc * xc).sum())
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - float((resid * resid).sum()) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(slope, intercept, r2)


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    k: int
    replications: int
    mean_abs_err: float
    std_err: float


@dataclass(frozen=True)
class ConvergenceResult:
    rows: tuple[ConvergenceRow, ...]
    fit: RateFit

    @property
    def errors(self) -> list[float]:
        return [r.mean_abs_err for r in self.rows]


def convergence_study(
    exp: Experiment,
    n_grid: Sequence[int],
    schedule: KSchedule,
    replications: int,
    workers: int = 1,
) -> ConvergenceResult:
    grid = [int(n) for n in n_grid]
    if len(grid) < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("n_grid must be strictly increasing with at least 2 points")
    rows = []
    for n in grid:
        k = schedule(n)
        est = l1_error(exp, n, k, replications, workers=workers)
        rows.append(ConvergenceRow(n, k, replications, est.mean, est.std_err))
    return ConvergenceResult(tuple(rows), rate_fit((r.n, r.mean_abs_err) for r in rows))

