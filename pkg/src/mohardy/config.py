"""Experiment configuration: a validated JSON document with a published schema."""

from __future__ import annotations

import json
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import DomainError
from .grid_forms import Grid
from .growth import from_name
from .maximal import mollifier_from_name
from .suite import SuiteCounts

U64_MAX = 2**64 - 1


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridConfig(_Section):
    n: int = Field(2, ge=2, le=3)
    N: int = Field(64, ge=8, le=1024)
    L: float = Field(4.0, gt=0.0)

    @field_validator("N")
    @classmethod
    def _even(cls, v):
        if v % 2:
            raise ValueError("N must be even")
        return v

    @classmethod
    def parse(cls, text: str) -> "GridConfig":
        parts = text.split(",")
        if len(parts) != 3:
            raise ValueError("grid must be given as n,N,L")
        return cls(n=int(parts[0]), N=int(parts[1]), L=float(parts[2]))

    def build(self) -> Grid:
        return Grid(self.n, self.N, self.L)


class Tolerances(_Section):
    luxembourg: float = Field(1e-8, gt=0.0, lt=1e-2)
    closed: float = Field(1e-8, gt=0.0, lt=1e-2)


class NormSection(_Section):
    input: str | None = None
    q_prime: float = Field(2.0, gt=1.0)


class DecomposeSection(_Section):
    input: str | None = None
    degree: int | None = Field(None, ge=1, le=3)


class FactorizeSection(_Section):
    input: str | None = None
    ell: int | None = Field(None, ge=1, le=2)
    scalar: bool = False


class DivcurlSection(_Section):
    pairs: int = Field(100, ge=1, le=100000)


class SuiteSection(_Section):
    calculus_fields: int = Field(20, ge=1)
    smoke: bool = True
    norm_balls: int = Field(10, ge=1)
    norm_fields: int = Field(10, ge=1)
    pipeline_atoms: int = Field(20, ge=1)
    nq_decompositions: int = Field(10, ge=1)
    nq_trials: int = Field(50, ge=1)
    nq_inputs: int = Field(5, ge=1)
    case_atoms: int = Field(20, ge=1)
    e2e_inputs: int = Field(10, ge=1)
    l1_trials: int = Field(10, ge=1)
    divcurl_pairs: int = Field(100, ge=1)
    divcurl_spot: int = Field(10, ge=1)
    lemma_balls: int = Field(50, ge=1)
    wide_balls: int = Field(10, ge=1)
    min_pairs: int = Field(20, ge=1)
    jn_fixtures: int = Field(20, ge=1)
    determinism: bool = True
    criteria: list[int] = Field(default_factory=lambda: list(range(1, 10)))

    @field_validator("criteria")
    @classmethod
    def _known(cls, v):
        bad = [c for c in v if c not in range(1, 10)]
        if bad:
            raise ValueError(f"unknown criteria {bad}; expected numbers 1..9")
        return sorted(set(v))

    @model_validator(mode="after")
    def _spot(self):
        if self.divcurl_spot > self.divcurl_pairs:
            raise ValueError("divcurl_spot cannot exceed divcurl_pairs")
        return self

    def counts(self) -> SuiteCounts:
        return SuiteCounts(**self.model_dump(exclude={"criteria"}))


class ExperimentConfig(_Section):
    grid: GridConfig = GridConfig()
    growth: str = "theta"
    mollifier: str = "bump"
    levels_K: int = Field(20, ge=1, le=60)
    tolerances: Tolerances = Tolerances()
    seed: int = Field(0, ge=0, le=U64_MAX)
    jobs: int = Field(1, ge=1, le=256)
    norm: NormSection = NormSection()
    decompose: DecomposeSection = DecomposeSection()
    factorize: FactorizeSection = FactorizeSection()
    divcurl: DivcurlSection = DivcurlSection()
    suite: SuiteSection = SuiteSection()

    @field_validator("growth")
    @classmethod
    def _growth(cls, v):
        try:
            from_name(v)
        except DomainError as exc:
            raise ValueError(str(exc)) from exc
        return v

    @field_validator("mollifier")
    @classmethod
    def _mollifier(cls, v):
        try:
            m = mollifier_from_name(v)
        except DomainError as exc:
            raise ValueError(str(exc)) from exc
        if not m.unit_mass:
            raise ValueError("the maximal-function mollifier must have unit mass")
        return v

    @model_validator(mode="after")
    def _consistent(self):
        from_name(self.growth, self.grid.n)
        if self.decompose.degree is not None and self.decompose.degree > self.grid.n:
            raise ValueError(f"decompose.degree exceeds n = {self.grid.n}")
        return self

    def echo(self) -> dict:
        """The configuration as recorded in reports; execution details such as jobs are left out."""
        return self.model_dump(mode="json", exclude={"jobs"})


def load_config(path: str | Path | None, overrides: dict | None = None) -> ExperimentConfig:
    """Read a JSON config, apply flat top-level overrides and validate."""
    data = {}
    if path is not None:
        data = json.loads(Path(path).read_text())
        if not isinstance(data, dict):
            raise ValueError("the config document must be a JSON object")
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    return ExperimentConfig.model_validate(data)


def schema() -> dict:
    return ExperimentConfig.model_json_schema()
