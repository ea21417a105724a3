"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from pydantic import BaseModel, Field


class CandidateModel(BaseModel):
    text: str
    score: float


class VAPointModel(BaseModel):
    i: int
    v: float
    a: float


class DiagnosticModel(BaseModel):
    kind: str
    detail: str = ""


class AssistRequest(BaseModel):
    text: str
    approach: str | None = None
    beam_size: int | None = Field(default=None, ge=1)
    num_candidates: int | None = Field(default=None, ge=1)
    max_length: int | None = Field(default=None, ge=1)
    include_flow: bool = True
    include_likeness: bool = True
    allow_logging: bool = False


class AssistResponse(BaseModel):
    sentences: list[str]
    gap_positions: list[int]
    candidates_per_gap: list[list[CandidateModel]]
    best_completion: list[str]
    story_likeness: float | None = None
    flow_before: list[VAPointModel] | None = None
    flow_after: list[VAPointModel] | None = None
    diagnostics: list[DiagnosticModel]
    timing_ms: float


class PredictMissingRequest(BaseModel):
    text: str
    beam_size: int | None = Field(default=None, ge=1)
    num_candidates: int | None = Field(default=None, ge=1)
    max_length: int | None = Field(default=None, ge=1)


class PredictMissingResponse(BaseModel):
    sentences: list[str]
    gap_positions: list[int]
    diagnostics: list[DiagnosticModel]
    timing_ms: float


class CompleteRequest(BaseModel):
    sentences: list[str]
    gap_positions: list[int]
    beam_size: int | None = Field(default=None, ge=1)
    num_candidates: int | None = Field(default=None, ge=1)
    max_length: int | None = Field(default=None, ge=1)


class CompleteResponse(BaseModel):
    candidates_per_gap: list[list[CandidateModel]]
    diagnostics: list[DiagnosticModel]
    timing_ms: float


class GenerateRequest(BaseModel):
    input_text: str
    role: str = ""
    beam_size: int = Field(default=4, ge=1)
    num_candidates: int = Field(default=3, ge=1)
    max_length: int = Field(default=256, ge=1)


class GenerateResponse(BaseModel):
    candidates: list[CandidateModel]


class HealthResponse(BaseModel):
    status: str
    failing: list[str] = []


class ConfigResponse(BaseModel):
    approach: str
    backends: list[dict]
    markers: dict
    default_params: dict
    version: str
