import os
from enum import Enum
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

DEFAULT_MAX_STEPS = int(os.environ.get("CC_MAX_STEPS", "100000"))
DEFAULT_MODEL_DEPTH = int(os.environ.get("CC_MODEL_DEPTH", "32"))
DEFAULT_MODEL_RANK = int(os.environ.get("CC_MODEL_RANK", "2"))
DEFAULT_MODEL_SAMPLES = int(os.environ.get("CC_MODEL_SAMPLES", "64"))

MAX_SOURCE_LENGTH = 200_000


class ReductionConfig(BaseModel):
    """Топливо для редукции: сколько шагов можно сделать до FuelExhausted."""

    model_config = ConfigDict(frozen=True)

    max_steps: int = Field(default_factory=lambda: DEFAULT_MAX_STEPS, gt=0)


class ModelConfig(BaseModel):
    """Границы конечной модели.

    universe_rank - ранг r: универсум Type i перечисляется как V_(r+i+1);
    fixpoint_depth - число итераций наименьшей неподвижной точки;
    sample_budget - сколько значений перебираем для проверки функций и контекстов.
    """

    model_config = ConfigDict(frozen=True)

    universe_rank: int = Field(default_factory=lambda: DEFAULT_MODEL_RANK, ge=0, le=4)
    fixpoint_depth: int = Field(default_factory=lambda: DEFAULT_MODEL_DEPTH, gt=0)
    sample_budget: int = Field(default_factory=lambda: DEFAULT_MODEL_SAMPLES, gt=0)
    frontier_cap: int = Field(default=4096, gt=0)
    product_cap: int = Field(default=4096, gt=0)


class Verdict(str, Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"

    def __and__(self, other: "Verdict") -> "Verdict":
        if Verdict.NO in (self, other):
            return Verdict.NO
        if Verdict.UNKNOWN in (self, other):
            return Verdict.UNKNOWN
        return Verdict.YES

    @classmethod
    def of(cls, flag: bool) -> "Verdict":
        return cls.YES if flag else cls.NO


class Diagnostic(BaseModel):
    severity: Literal["error", "warning"] = "error"
    line: Optional[int] = None
    column: Optional[int] = None
    rule: str = ""
    message: str

    def render(self, filename: str = "<input>") -> str:
        where = filename
        if self.line is not None:
            where += f":{self.line}"
            if self.column is not None:
                where += f":{self.column}"
        rule = f"[{self.rule}] " if self.rule else ""
        return f"{where}: {self.severity}: {rule}{self.message}"


class ItemResult(BaseModel):
    kind: str
    name: Optional[str] = None
    detail: Optional[str] = None


class CheckRequest(BaseModel):
    source: str = Field(..., min_length=1, max_length=MAX_SOURCE_LENGTH)
    max_steps: Optional[int] = Field(default=None, gt=0)


class CheckResponse(BaseModel):
    ok: bool
    items: List[ItemResult] = []
    diagnostics: List[Diagnostic] = []


class NormalizeRequest(BaseModel):
    source: str = Field(default="", max_length=MAX_SOURCE_LENGTH)
    term: str = Field(..., min_length=1, max_length=10_000)
    max_steps: Optional[int] = Field(default=None, gt=0)


class NormalizeResponse(BaseModel):
    term: str
    normal_form: str


class ModelRequest(BaseModel):
    source: str = Field(default="", max_length=MAX_SOURCE_LENGTH)
    term: str = Field(..., min_length=1, max_length=10_000)
    type: str = Field(..., min_length=1, max_length=10_000)
    depth: Optional[int] = Field(default=None, gt=0, le=256)
    rank: Optional[int] = Field(default=None, ge=0, le=4)
    samples: Optional[int] = Field(default=None, gt=0, le=4096)

    def model_config_override(self) -> ModelConfig:
        values = {}
        if self.depth is not None:
            values["fixpoint_depth"] = self.depth
        if self.rank is not None:
            values["universe_rank"] = self.rank
        if self.samples is not None:
            values["sample_budget"] = self.samples
        return ModelConfig(**values)


class JudgmentResult(BaseModel):
    name: str
    verdict: Verdict
    depth: int
    samples: int
    complete: bool = False
    notes: List[str] = []

    def render(self) -> str:
        return (
            f"JUDGMENT {self.name}: {self.verdict.value} "
            f"(depth={self.depth}, samples={self.samples})"
        )


class SoundnessReport(BaseModel):
    results: List[JudgmentResult] = []

    def count(self, verdict: Verdict) -> int:
        return sum(1 for r in self.results if r.verdict == verdict)

    @property
    def ok(self) -> bool:
        return self.count(Verdict.NO) == 0

    def render(self) -> str:
        lines = [r.render() for r in self.results]
        lines.append(
            f"summary: yes={self.count(Verdict.YES)} no={self.count(Verdict.NO)} "
            f"unknown={self.count(Verdict.UNKNOWN)}"
        )
        return "\n".join(lines)


class ModelResponse(BaseModel):
    value: str
    member: Verdict
    depth: int
    samples: int
