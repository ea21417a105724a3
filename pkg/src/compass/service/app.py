"""FastAPI service exposing the assist pipeline.

Stateless by design: every request is self-describing and no user text is
persisted. With the opt-in request flag AND the COMPASS_LOG_OPT_IN env var
set, only request timings are logged.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import __version__
from ..affect import HeuristicLikenessScorer, LexicalVadScorer
from ..backend import Backend, Candidate, GenerationParams, RemoteBackend, make_oracle_backend
from ..errors import (
    BackendUnavailableError,
    CompassError,
    EmptyInputError,
)
from ..pipeline import (
    PipelineConfig,
    Scorers,
    assist,
    complete_v2,
    predict_missing,
)
from ..story import Story
from ..tokens import masked_from_element_indices
from . import schemas

logger = logging.getLogger("compass.service")


class PoolTimeoutError(CompassError):
    pass


class SerializedBackend:
    """Backend instances are single-threaded; serialize calls per instance.

    Lock acquisition beyond the timeout surfaces as pool exhaustion (503).
    """

    def __init__(self, inner: Backend, timeout: float = 30.0):
        self._inner = inner
        self._lock = threading.Lock()
        self._timeout = timeout
        self.manifest = inner.manifest

    def generate(self, input_text: str, params: GenerationParams) -> list[Candidate]:
        if not self._lock.acquire(timeout=self._timeout):
            raise PoolTimeoutError("backend pool exhausted")
        try:
            return self._inner.generate(input_text, params)
        finally:
            self._lock.release()

    def probe(self) -> bool:
        return self._inner.probe()


@dataclass
class AppConfig:
    """Service configuration; a YAML/JSON file with env-var overrides."""

    approach: str = "two_module_v2"
    backends: dict = field(default_factory=dict)  # role -> backend spec dict
    scorers: dict = field(default_factory=lambda: {"likeness": "heuristic", "vad": "lexical"})
    port: int = 8008
    pool_timeout: float = 30.0
    beam_size: int = 4
    num_candidates: int = 3
    max_length: int = 256
    model_dir: str = ""

    @classmethod
    def load(cls, path) -> "AppConfig":
        text = Path(path).read_text(encoding="utf-8")
        if str(path).endswith((".yaml", ".yml")):
            import yaml

            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
        config = cls(**data)
        if os.environ.get("COMPASS_MODEL_DIR"):
            config.model_dir = os.environ["COMPASS_MODEL_DIR"]
        return config


def build_backend(spec: dict, model_dir: str = "") -> Backend:
    kind = spec.get("kind")
    if kind == "oracle":
        if spec.get("template") == "vnmpp":
            from ..synthetic import template_vnmpp_oracle

            return template_vnmpp_oracle()
        mapping = {}
        if spec.get("mapping_file"):
            mapping = json.loads(Path(spec["mapping_file"]).read_text(encoding="utf-8"))
        return make_oracle_backend(
            mapping, fallback=spec.get("fallback", "identity"), role=spec.get("role", "")
        )
    if kind == "tiny":
        from ..tiny import TinyBackend

        checkpoint = Path(model_dir or ".") / spec["checkpoint"]
        return TinyBackend(checkpoint)
    if kind == "hf":
        from ..hf import HFSeq2SeqBackend

        return HFSeq2SeqBackend(spec["checkpoint"], role=spec.get("role", ""))
    if kind == "remote":
        return RemoteBackend(spec["url"], role=spec.get("role", ""))
    raise ValueError(f"unknown backend kind: {kind}")


def build_scorers(spec: dict) -> Scorers:
    scorers = Scorers()
    if spec.get("likeness") == "heuristic":
        scorers.likeness = HeuristicLikenessScorer()
    if spec.get("vad") == "lexical":
        scorers.vad = LexicalVadScorer()
    return scorers


def build_pipeline_config(config: AppConfig) -> PipelineConfig:
    backends = {
        role: build_backend(spec, config.model_dir)
        for role, spec in config.backends.items()
    }
    params = GenerationParams(
        beam_size=config.beam_size,
        num_candidates=config.num_candidates,
        max_length=config.max_length,
    )
    return PipelineConfig(
        approach=config.approach,
        vnmpp_backend=backends.get("vnmpp"),
        sc_backend=backends.get("sc") or backends.get("end_to_end"),
        params=params,
    )


def _candidate_models(per_gap):
    return [
        [schemas.CandidateModel(text=c.text, score=c.score) for c in bucket]
        for bucket in per_gap
    ]


def _diag_models(diags):
    return [schemas.DiagnosticModel(kind=d.kind, detail=d.detail) for d in diags]


def _flow_models(points):
    if points is None:
        return None
    return [schemas.VAPointModel(i=p.sentence_index, v=p.valence, a=p.arousal) for p in points]


def create_app(
    pipeline_config: PipelineConfig,
    scorers: Scorers | None = None,
    pool_timeout: float = 30.0,
) -> FastAPI:
    app = FastAPI(title="compass", version=__version__)

    base = pipeline_config
    serialized = PipelineConfig(
        approach=base.approach,
        vnmpp_backend=SerializedBackend(base.vnmpp_backend, pool_timeout)
        if base.vnmpp_backend
        else None,
        sc_backend=SerializedBackend(base.sc_backend, pool_timeout)
        if base.sc_backend
        else None,
        params=base.params,
        missing_marker=base.missing_marker,
        completion_marker=base.completion_marker,
    )
    scorers = scorers if scorers is not None else Scorers()
    log_opt_in = os.environ.get("COMPASS_LOG_OPT_IN", "") == "1"

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    def _params_override(beam_size=None, num_candidates=None, max_length=None) -> GenerationParams:
        p = serialized.params
        beam = beam_size or p.beam_size
        cands = num_candidates or p.num_candidates
        cands = min(cands, beam)
        return GenerationParams(
            beam_size=beam,
            num_candidates=cands,
            max_length=max_length or p.max_length,
            min_length=p.min_length,
            length_penalty=p.length_penalty,
        )

    def _require_text(text: str) -> str:
        if not text.strip():
            raise HTTPException(status_code=422, detail="text is empty")
        return text

    @app.post("/assist", response_model=schemas.AssistResponse)
    def post_assist(body: schemas.AssistRequest):
        _require_text(body.text)
        approach = body.approach or serialized.approach
        if approach not in ("two_module", "two_module_v2", "end_to_end"):
            raise HTTPException(status_code=400, detail=f"unknown approach: {approach}")
        config = PipelineConfig(
            approach=approach,
            vnmpp_backend=serialized.vnmpp_backend,
            sc_backend=serialized.sc_backend,
            params=_params_override(body.beam_size, body.num_candidates, body.max_length),
            missing_marker=serialized.missing_marker,
            completion_marker=serialized.completion_marker,
        )
        request_scorers = Scorers(
            likeness=scorers.likeness if body.include_likeness else None,
            vad=scorers.vad if body.include_flow else None,
        )
        start = time.perf_counter()
        try:
            result = assist(body.text, config, request_scorers)
        except EmptyInputError:
            raise HTTPException(status_code=422, detail="text is empty")
        except (BackendUnavailableError, PoolTimeoutError) as exc:
            raise HTTPException(status_code=503, detail=str(exc))
        elapsed = (time.perf_counter() - start) * 1000.0
        if log_opt_in and body.allow_logging:
            logger.info("assist timing_ms=%.1f", elapsed)
        return schemas.AssistResponse(
            sentences=list(result.input_story.sentences),
            gap_positions=list(result.gap_positions),
            candidates_per_gap=_candidate_models(result.candidates_per_gap),
            best_completion=list(result.best_completion.sentences),
            story_likeness=result.story_likeness,
            flow_before=_flow_models(result.flow_before),
            flow_after=_flow_models(result.flow_after),
            diagnostics=_diag_models(result.diagnostics),
            timing_ms=elapsed,
        )

    @app.post("/predict-missing", response_model=schemas.PredictMissingResponse)
    def post_predict_missing(body: schemas.PredictMissingRequest):
        _require_text(body.text)
        config = PipelineConfig(
            approach="two_module_v2"
            if serialized.approach == "end_to_end"
            else serialized.approach,
            vnmpp_backend=serialized.vnmpp_backend or serialized.sc_backend,
            sc_backend=serialized.sc_backend,
            params=_params_override(body.beam_size, body.num_candidates, body.max_length),
            missing_marker=serialized.missing_marker,
            completion_marker=serialized.completion_marker,
        )
        start = time.perf_counter()
        try:
            from ..story import segment_text

            story = segment_text(body.text)
            result = predict_missing(story, config)
        except EmptyInputError:
            raise HTTPException(status_code=422, detail="text is empty")
        except (BackendUnavailableError, PoolTimeoutError) as exc:
            raise HTTPException(status_code=503, detail=str(exc))
        except CompassError as exc:
            raise HTTPException(status_code=500, detail=str(exc))
        elapsed = (time.perf_counter() - start) * 1000.0
        return schemas.PredictMissingResponse(
            sentences=list(story.sentences),
            gap_positions=list(result.masked.gap_element_indices),
            diagnostics=_diag_models(result.diagnostics),
            timing_ms=elapsed,
        )

    @app.post("/complete", response_model=schemas.CompleteResponse)
    def post_complete(body: schemas.CompleteRequest):
        if not body.sentences and not body.gap_positions:
            raise HTTPException(status_code=422, detail="nothing to complete")
        for s in body.sentences:
            if not s.strip():
                raise HTTPException(status_code=422, detail="empty sentence")
        try:
            masked = masked_from_element_indices(
                [s.strip() for s in body.sentences], body.gap_positions
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        config = PipelineConfig(
            approach=serialized.approach,
            vnmpp_backend=serialized.vnmpp_backend or serialized.sc_backend,
            sc_backend=serialized.sc_backend,
            params=_params_override(body.beam_size, body.num_candidates, body.max_length),
            missing_marker=serialized.missing_marker,
            completion_marker=serialized.completion_marker,
        )
        start = time.perf_counter()
        try:
            per_gap, diags = complete_v2(masked, config)
        except (BackendUnavailableError, PoolTimeoutError) as exc:
            raise HTTPException(status_code=503, detail=str(exc))
        except CompassError as exc:
            raise HTTPException(status_code=500, detail=str(exc))
        elapsed = (time.perf_counter() - start) * 1000.0
        return schemas.CompleteResponse(
            candidates_per_gap=_candidate_models(per_gap),
            diagnostics=_diag_models(diags),
            timing_ms=elapsed,
        )

    @app.post("/generate", response_model=schemas.GenerateResponse)
    def post_generate(body: schemas.GenerateRequest):
        _require_text(body.input_text)
        backend = None
        for b in (serialized.vnmpp_backend, serialized.sc_backend):
            if b is not None and (not body.role or b.manifest.role == body.role):
                backend = b
                break
        if backend is None:
            backend = serialized.sc_backend or serialized.vnmpp_backend
        if backend is None:
            raise HTTPException(status_code=503, detail="no backend configured")
        params = GenerationParams(
            beam_size=body.beam_size,
            num_candidates=min(body.num_candidates, body.beam_size),
            max_length=body.max_length,
        )
        try:
            candidates = backend.generate(body.input_text, params)
        except (BackendUnavailableError, PoolTimeoutError) as exc:
            raise HTTPException(status_code=503, detail=str(exc))
        except CompassError as exc:
            raise HTTPException(status_code=500, detail=str(exc))
        return schemas.GenerateResponse(
            candidates=[schemas.CandidateModel(text=c.text, score=c.score) for c in candidates]
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def get_health():
        failing = []
        for b in (base.vnmpp_backend, base.sc_backend):
            if b is None:
                continue
            try:
                ok = b.probe()
            except Exception:
                ok = False
            if not ok:
                failing.append(f"{b.manifest.kind}:{b.manifest.role or 'unnamed'}")
        if failing:
            return JSONResponse(
                status_code=503, content={"status": "unhealthy", "failing": failing}
            )
        return schemas.HealthResponse(status="ok", failing=[])

    @app.get("/config", response_model=schemas.ConfigResponse)
    def get_config():
        manifests = [
            b.manifest.to_dict()
            for b in (base.vnmpp_backend, base.sc_backend)
            if b is not None
        ]
        return schemas.ConfigResponse(
            approach=base.approach,
            backends=manifests,
            markers={
                "missing": base.missing_marker,
                "completion": base.completion_marker,
            },
            default_params={
                "beam_size": base.params.beam_size,
                "num_candidates": base.params.num_candidates,
                "max_length": base.params.max_length,
            },
            version=__version__,
        )

    return app


def create_app_from_config(config: AppConfig) -> FastAPI:
    return create_app(
        build_pipeline_config(config),
        build_scorers(config.scorers),
        pool_timeout=config.pool_timeout,
    )
