"""Request models for the HTTP service.

These models pin down the wire shapes; semantic validation (space legality,
probability mass, score dimensions) stays in the core parsers so that the
service and the file formats reject malformed input identically.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SpaceModel(StrictModel):
    kind: Literal["bio", "dep_multi", "dep_single"]
    n: int = Field(ge=1)


class OutcomeModel(StrictModel):
    parts: list[list]
    prob: str | float


class DistributionModel(StrictModel):
    space: SpaceModel
    outcomes: list[OutcomeModel]


class ScoreEntryModel(StrictModel):
    part: list
    value: float | str


class ScoresModel(StrictModel):
    space: SpaceModel
    scores: list[ScoreEntryModel]


class OptimizerModel(StrictModel):
    step_rule: Literal["fixed", "backtracking"] = "backtracking"
    eta: float = 0.5
    beta: float = 0.5
    armijo_c: float = 1e-4
    grad_tolerance: float = 1e-8
    max_iters: int = 20000
    seed: int = 0


LOSS_NAMES = ("nll", "one-vs-all", "sep-bio", "sep-dep")


class CheckRequest(StrictModel):
    loss: Literal["nll", "one-vs-all", "sep-bio", "sep-dep"]
    distribution: DistributionModel
    tie_tolerance: float = 1e-9
    optimizer: OptimizerModel | None = None


class InferRequest(StrictModel):
    mode: Literal["map", "marginal"]
    scores: ScoresModel
    algo: Literal["auto", "brute", "fast"] = "auto"


class SearchRequest(StrictModel):
    loss: Literal["nll", "one-vs-all", "sep-bio", "sep-dep"]
    space: SpaceModel
    trials: int = Field(ge=0)
    seed: int = 0
    alpha: float = Field(default=1.0, gt=0)
    jobs: int = Field(default=1, ge=1)
    tie_tolerance: float = 1e-9
    optimizer: OptimizerModel | None = None


class ReproduceRequest(StrictModel):
    target: Literal["ner", "dep", "singleroot", "all"]
    fixture_dir: str | None = None
    tie_tolerance: float = 1e-9


class EnumerateRequest(StrictModel):
    space: SpaceModel
