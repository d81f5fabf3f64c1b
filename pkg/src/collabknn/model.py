"""
Synthetic laws for (ratings, target) with a known regression function.

``MultiplicativeModel`` draws ``X`` uniform on ``[1, x_max]^d`` and sets

    Y = |X*| * phi0(X* / |X*|) * eps,    phi0(z) = a + b <z, u>,

with ``X*`` the ratings restricted to the query mask, ``u`` the unit
all-ones direction of R^d and ``eps`` uniform on ``[1 - delta, 1 + delta]``.
The regression function is then exactly ``|x*| phi0(x*/|x*|)``: it is
positively homogeneous, as any limit of the cosine k-NN estimate must be.

``AdditiveNoiseModel`` is the negative control: its target ignores the
ratings, so its regression function is a constant and not homogeneous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Protocol

import numpy as np

from collabknn.core import QueryUser, RatingScale, mask_to_bool, rating_vector


class InfeasibleModelError(ValueError):
    """Model parameters would let a rating or target leave ``[1, s]``."""


class RatingModel(Protocol):
    scale: RatingScale

    def draw_users(self, mask: np.ndarray, blocks: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...

    def true_eta(self, query: QueryUser) -> float: ...


@dataclass(frozen=True)
class MultiplicativeModel:
    scale: RatingScale
    x_max: float = 2.0
    a: float = 0.6
    b: float = 1.0
    delta: float = 0.1
    mask_sizes: tuple[int, ...] | None = None  # admissible query-mask sizes; None = (d,)

    def __post_init__(self):
        s, d = self.scale.s, self.scale.d
        if not 1 <= self.x_max <= s:
            raise InfeasibleModelError(f"x_max must lie in [1, s={s}], got {self.x_max}")
        if not self.a > 0 or self.b < 0:
            raise InfeasibleModelError("need a > 0 and b >= 0")
        if not 0 <= self.delta < 1:
            raise InfeasibleModelError(f"delta must lie in [0, 1), got {self.delta}")
        sizes = (d,) if self.mask_sizes is None else tuple(self.mask_sizes)
        object.__setattr__(self, "mask_sizes", sizes)
        for m in sizes:
            self.check_feasible(m)

    @property
    def phi_lo(self) -> float:
        return self.a

    @property
    def phi_hi(self) -> float:
        return self.a + self.b

    def check_feasible(self, m: int) -> None:
        """Raise unless every target drawn with an ``m``-item mask lands in ``[1, s]``."""
        if not 1 <= m <= self.scale.d:
            raise InfeasibleModelError(f"mask size {m} outside 1..{self.scale.d}")
        r = math.sqrt(m)
        lo = r * self.phi_lo * (1 - self.delta)
        hi = self.x_max * r * self.phi_hi * (1 + self.delta)
        if lo < 1:
            raise InfeasibleModelError(
                f"mask size {m}: smallest target sqrt(m)*a*(1-delta) = {lo:.4g} < 1")
        if hi > self.scale.s:
            raise InfeasibleModelError(
                f"mask size {m}: largest target x_max*sqrt(m)*(a+b)*(1+delta) = {hi:.4g} > s = {self.scale.s}")

    def phi0(self, z: np.ndarray) -> np.ndarray:
        """``a + b <z, u>`` for unit vectors ``z`` (rows)."""
        z = np.asarray(z, dtype=np.float64)
        return self.a + self.b * z.sum(axis=-1) / math.sqrt(self.scale.d)

    def draw_users(self, mask: np.ndarray, blocks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """
        Turn ``(n, d + 1)`` uniform blocks into ratings ``X`` (n x d) and
        targets ``y`` computed from ``X`` restricted to ``mask``.
        """
        d = self.scale.d
        m = int(mask.sum())
        if m not in self.mask_sizes:
            self.check_feasible(m)
        blocks = np.atleast_2d(blocks)
        X = 1.0 + (self.x_max - 1.0) * blocks[:, :d]
        eps = 1.0 - self.delta + 2.0 * self.delta * blocks[:, d]
        xs = np.where(mask, X, 0.0)
        nrm = np.sqrt((xs * xs).sum(axis=1))
        y = nrm * self.phi0(xs / nrm[:, None]) * eps
        if (y < 1).any() or (y > self.scale.s).any():
            raise AssertionError("feasibility violated: target outside [1, s]")
        return X, y

    def true_eta(self, query: QueryUser) -> float:
        x = query.ratings
        nrm = query.norm
        return nrm * float(self.phi0(x / nrm))


@dataclass(frozen=True)
class AdditiveNoiseModel:
    """Target ``c + e`` with ``e`` uniform on ``[-h, h]``, independent of the ratings."""

    scale: RatingScale
    x_max: float = 2.0
    c: float = 5.0
    h: float = 1.0

    def __post_init__(self):
        if not (1 <= self.c - self.h and self.c + self.h <= self.scale.s and 1 <= self.x_max <= self.scale.s):
            raise InfeasibleModelError("additive model must keep ratings and targets in [1, s]")

    def draw_users(self, mask: np.ndarray, blocks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        d = self.scale.d
        blocks = np.atleast_2d(blocks)
        X = 1.0 + (self.x_max - 1.0) * blocks[:, :d]
        y = self.c - self.h + 2.0 * self.h * blocks[:, d]
        return X, y

    def true_eta(self, query: QueryUser) -> float:
        return self.c


def draw_user(model: RatingModel, mask, rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """One ``(X, y)`` pair; ``y`` depends on ``X`` restricted to ``mask``."""
    d = model.scale.d
    X, y = model.draw_users(mask_to_bool(mask, d), rng.random(d + 1)[None, :])
    return rating_vector(X[0], model.scale.s), float(y[0])


def query_from(model: RatingModel, mask, block: np.ndarray) -> QueryUser:
    """Query user whose ratings are a model draw restricted to ``mask``."""
    d = model.scale.d
    mb = mask_to_bool(mask, d)
    X, _ = model.draw_users(mb, np.asarray(block)[None, :])
    return QueryUser(np.where(mb, X[0], 0.0), frozenset(mask), model.scale.s)


class OracleResult(NamedTuple):
    mc_mean: float
    closed_form: float
    std_err: float
    accepted: int


def f_oracle_check(
    model: RatingModel,
    probe: QueryUser,
    samples: int,
    rng: np.random.Generator,
    theta_tol: float = 0.02,
) -> OracleResult:
    """
    Monte Carlo conditional mean of ``Y / |X*|`` given the direction of
    ``X*`` (within ``theta_tol`` radians of the probe direction, by
    rejection), next to the model's claimed ``eta(probe) / |probe|``.

    For a law obeying the homogeneous form the two agree up to sampling error
    and the cone-width bias.
    """
    if samples < 10_000:
        raise ValueError(f"need at least 10^4 samples, got {samples}")
    d = model.scale.d
    mask = probe.bool_mask()
    X, y = model.draw_users(mask, rng.random((samples, d + 1)))
    xs = np.where(mask, X, 0.0)
    nrm = np.sqrt((xs * xs).sum(axis=1))
    z = xs / nrm[:, None]
    z0 = probe.ratings / probe.norm
    chord = np.sqrt(((z - z0) ** 2).sum(axis=1))
    angle = 2.0 * np.arcsin(np.minimum(chord / 2.0, 1.0))
    keep = angle <= theta_tol
    count = int(keep.sum())
    if count < 100:
        raise ValueError(f"only {count} of {samples} draws within {theta_tol} rad; widen the tolerance")
    r = y[keep] / nrm[keep]
    return OracleResult(
        float(r.mean()),
        model.true_eta(probe) / probe.norm,
        float(r.std(ddof=1) / math.sqrt(count)),
        count,
    )
