"""Experiment configuration files (YAML), validated before any computation."""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, ValidationError, field_validator, model_validator

from collabknn.core import RatingScale
from collabknn.harness import Experiment, KSchedule
from collabknn.model import InfeasibleModelError, MultiplicativeModel
from collabknn.reveal import ResponderProcess, RevealProcess
from collabknn.similarity import penalty_map


class ConfigError(ValueError):
    pass


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ScaleSection(_Section):
    s: float = Field(10.0, gt=1)
    d: PositiveInt


class ModelSection(_Section):
    x_max: float = 2.0
    a: float = 0.6
    b: float = 1.0
    delta: float = Field(0.1, ge=0, lt=1)


class RevealSection(_Section):
    kind: Literal["all_at_once", "incremental_4_plus_1", "uniform_batch"]
    b0: PositiveInt = 4
    b: PositiveInt = 1


class ResponderSection(_Section):
    kind: Literal["all", "bernoulli_growth"]
    p: float = Field(1.0, gt=0, le=1)


class ScheduleSection(_Section):
    c: float = Field(1.0, gt=0)
    gamma: float = Field(gt=0, lt=1)
    rounding: Literal["round", "ceil"] = "round"


class StudySection(_Section):
    n_grid: list[PositiveInt] = Field(min_length=2)
    schedule: ScheduleSection
    replications: int = Field(200, ge=2)
    master_seed: int = Field(0, ge=0)
    metric: Literal["l1", "l2"] = "l1"
    psi: Literal["identity", "sqrt"] = "identity"
    fixed_query_mask: Optional[list[PositiveInt]] = None
    workers: PositiveInt = 1

    @field_validator("n_grid")
    @classmethod
    def _increasing(cls, v):
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("n_grid must be strictly increasing")
        return v


class ExperimentConfig(_Section):
    scale: ScaleSection
    model: ModelSection = ModelSection()
    reveal: RevealSection
    responder: ResponderSection
    study: StudySection

    @model_validator(mode="after")
    def _feasible(self):
        # builds every component so bad combinations fail here, not mid-run
        self.experiment()
        return self

    def experiment(self, seed: int | None = None, metric: str | None = None) -> Experiment:
        d = self.scale.d
        reveal = RevealProcess(self.reveal.kind, self.reveal.b0, self.reveal.b)
        try:
            reveal.validate(d)
        except ValueError as e:
            raise ValueError(f"reveal: {e}") from None
        fixed = frozenset(self.study.fixed_query_mask) if self.study.fixed_query_mask else None
        if fixed and max(fixed) > d:
            raise ValueError(f"study.fixed_query_mask: indices must lie in 1..{d}")
        size = len(fixed) if fixed else reveal.first_size(d)
        try:
            model = MultiplicativeModel(
                RatingScale(self.scale.s, d), self.model.x_max, self.model.a,
                self.model.b, self.model.delta, mask_sizes=(size,),
            )
        except InfeasibleModelError as e:
            raise ValueError(f"model: {e}") from None
        return Experiment(
            model,
            reveal,
            ResponderProcess(self.responder.kind, self.responder.p),
            master_seed=self.study.master_seed if seed is None else seed,
            psi=penalty_map(self.study.psi),
            metric=metric or self.study.metric,
            fixed_query_mask=fixed,
        )

    def schedule(self) -> KSchedule:
        sc = self.study.schedule
        return KSchedule(sc.c, sc.gamma, sc.rounding)


def _format(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "\n".join(lines)


def parse_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_format(e)) from None


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping of sections")
    return parse_config(data)
