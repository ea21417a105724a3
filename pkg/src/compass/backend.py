"""Uniform contract over text-to-text generators.

Backends are deterministic: beam search only, no sampling. The oracle
backend is a test double with analytic knowledge of the gold corruption,
so every pipeline can be verified without a GPU or a trained model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, runtime_checkable

from .errors import BackendUnavailableError, SpecMissError
from .tokens import COMPLETION_MARKER, MISSING_MARKER


@dataclass(frozen=True)
class GenerationParams:
    beam_size: int = 4
    num_candidates: int = 3
    max_length: int = 256
    min_length: int = 0
    length_penalty: float = 1.0

    def __post_init__(self):
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")
        if not 1 <= self.num_candidates <= self.beam_size:
            raise ValueError("num_candidates must be in [1, beam_size]")
        if self.min_length > self.max_length:
            raise ValueError("min_length must be <= max_length")


@dataclass(frozen=True)
class Candidate:
    text: str
    score: float  # log-probability or rank-derived surrogate, <= 0


@dataclass
class BackendManifest:
    kind: str  # oracle | tiny | hf | remote
    checkpoint: str = ""
    role: str = ""  # vnmpp | sc | sc_v2 | end_to_end
    markers: dict = field(
        default_factory=lambda: {
            "missing": MISSING_MARKER,
            "completion": COMPLETION_MARKER,
        }
    )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "checkpoint": self.checkpoint,
            "role": self.role,
            "markers": dict(self.markers),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BackendManifest":
        return cls(
            kind=d["kind"],
            checkpoint=d.get("checkpoint", ""),
            role=d.get("role", ""),
            markers=dict(d.get("markers", {})),
        )


@runtime_checkable
class Backend(Protocol):
    manifest: BackendManifest

    def generate(self, input_text: str, params: GenerationParams) -> list[Candidate]:
        ...

    def probe(self) -> bool:
        ...


def _dedupe_sorted(candidates: list[Candidate], limit: int) -> list[Candidate]:
    """Score-sort, drop duplicate texts, truncate to limit."""
    out = []
    seen = set()
    for c in sorted(candidates, key=lambda c: -c.score):
        if c.text in seen:
            continue
        seen.add(c.text)
        out.append(c)
        if len(out) >= limit:
            break
    return out


class OracleBackend:
    """Deterministic test double.

    spec maps input strings to an output string, a list of output strings
    (simulated beam), or is a callable computing the answer analytically.
    fallback: "error" raises SpecMiss on uncovered inputs; "identity"
    echoes the input.
    """

    def __init__(
        self,
        spec: dict | Callable[[str], str | list[str] | None],
        fallback: str = "error",
        role: str = "",
    ):
        if fallback not in ("error", "identity"):
            raise ValueError(f"unknown fallback: {fallback}")
        self._spec = spec
        self._fallback = fallback
        self.manifest = BackendManifest(kind="oracle", role=role)

    def _lookup(self, input_text: str):
        if callable(self._spec):
            return self._spec(input_text)
        return self._spec.get(input_text)

    def generate(self, input_text: str, params: GenerationParams) -> list[Candidate]:
        answer = self._lookup(input_text)
        if answer is None:
            if self._fallback == "identity":
                answer = input_text
            else:
                raise SpecMissError(f"oracle has no answer for: {input_text!r}")
        outputs = [answer] if isinstance(answer, str) else list(answer)
        candidates = [Candidate(text=t, score=-float(rank)) for rank, t in enumerate(outputs)]
        return _dedupe_sorted(candidates, params.num_candidates)

    def probe(self) -> bool:
        return True


def make_oracle_backend(spec, fallback: str = "error", role: str = "") -> OracleBackend:
    return OracleBackend(spec, fallback=fallback, role=role)


class RemoteBackend:
    """Speaks the service's /generate wire format over HTTP."""

    def __init__(self, base_url: str, role: str = "", timeout: float = 60.0):
        import httpx

        self._client = httpx.Client(base_url=base_url.rstrip("/"), timeout=timeout)
        self.manifest = BackendManifest(kind="remote", checkpoint=base_url, role=role)

    def generate(self, input_text: str, params: GenerationParams) -> list[Candidate]:
        import httpx

        try:
            resp = self._client.post(
                "/generate",
                json={
                    "input_text": input_text,
                    "role": self.manifest.role,
                    "beam_size": params.beam_size,
                    "num_candidates": params.num_candidates,
                    "max_length": params.max_length,
                },
            )
            resp.raise_for_status()
        except httpx.HTTPError as exc:
            raise BackendUnavailableError(str(exc)) from exc
        body = resp.json()
        return [Candidate(text=c["text"], score=c["score"]) for c in body["candidates"]]

    def probe(self) -> bool:
        import httpx

        try:
            return self._client.get("/health").status_code == 200
        except httpx.HTTPError:
            return False


def save_manifest(manifest: BackendManifest, checkpoint_dir) -> None:
    path = Path(checkpoint_dir) / "manifest.json"
    path.write_text(json.dumps(manifest.to_dict(), indent=2), encoding="utf-8")


def load_manifest(checkpoint_dir) -> BackendManifest:
    path = Path(checkpoint_dir) / "manifest.json"
    return BackendManifest.from_dict(json.loads(path.read_text(encoding="utf-8")))
