"""Story-likeness and per-sentence valence/arousal scoring.

Both live behind pluggable scorer contracts; the defaults shipped here are
deterministic lightweight scorers so the service runs without model
downloads. Training real scorers (a small encoder regression head for
valence/arousal, a binary classifier for story-likeness) is documented in
docs/full_scale_recipe.md and reuses the finetune optimizer defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

from .errors import ScorerUnavailableError
from .story import Story

STORY_LIKE_THRESHOLD = 0.5


@dataclass(frozen=True)
class VAPoint:
    sentence_index: int
    valence: float
    arousal: float

    def to_dict(self) -> dict:
        return {"i": self.sentence_index, "v": self.valence, "a": self.arousal}


@dataclass
class ScorerManifest:
    kind: str  # story_likeness | vad
    value_range: tuple[float, float]
    training_note: str = ""

    def __post_init__(self):
        lo, hi = self.value_range
        if not lo < hi:
            raise ValueError("value range must be non-degenerate")


@runtime_checkable
class VadScorer(Protocol):
    manifest: ScorerManifest

    def score_sentences(self, sentences: list[str]) -> list[tuple[float, float]]:
        ...


@runtime_checkable
class LikenessScorer(Protocol):
    manifest: ScorerManifest

    def score_text(self, text: str) -> float:
        ...


@dataclass
class ConstantVadScorer:
    valence: float = 0.0
    arousal: float = 0.0
    manifest: ScorerManifest = field(
        default_factory=lambda: ScorerManifest("vad", (-5.0, 5.0), "constant mock")
    )

    def score_sentences(self, sentences):
        return [(self.valence, self.arousal) for _ in sentences]


@dataclass
class LexicalVadScorer:
    """Deterministic surrogate: cheap lexical signals mapped into [1, 5].

    Valence tracks positive/negative word hits; arousal tracks exclamation
    marks and sentence length. Stands in for a trained regression model.
    """

    manifest: ScorerManifest = field(
        default_factory=lambda: ScorerManifest("vad", (1.0, 5.0), "lexical surrogate")
    )

    _POSITIVE = frozenset(
        "great happy proud love cool fancy nice good perfect enjoyed glad won".split()
    )
    _NEGATIVE = frozenset(
        "sad bad angry lost broke afraid cried terrible missed failed".split()
    )

    def score_sentences(self, sentences):
        points = []
        for s in sentences:
            words = [w.strip(".,!?\"'").lower() for w in s.split()]
            pos = sum(1 for w in words if w in self._POSITIVE)
            neg = sum(1 for w in words if w in self._NEGATIVE)
            valence = 3.0 + min(max(pos - neg, -2), 2) * 0.8
            arousal = 3.0 + (0.8 if s.rstrip().endswith("!") else 0.0)
            arousal += min(len(words), 20) / 20.0 - 0.5
            points.append((round(valence, 3), round(min(max(arousal, 1.0), 5.0), 3)))
        return points


@dataclass
class ConstantLikenessScorer:
    value: float = 1.0
    manifest: ScorerManifest = field(
        default_factory=lambda: ScorerManifest(
            "story_likeness", (0.0, 1.0), "constant mock"
        )
    )

    def score_text(self, text: str) -> float:
        return self.value


@dataclass
class HeuristicLikenessScorer:
    """Deterministic surrogate classifier: rewards multi-sentence texts with
    terminal punctuation and moderate sentence lengths."""

    manifest: ScorerManifest = field(
        default_factory=lambda: ScorerManifest(
            "story_likeness", (0.0, 1.0), "heuristic surrogate"
        )
    )

    def score_text(self, text: str) -> float:
        sentences = [s for s in text.replace("!", ".").replace("?", ".").split(".") if s.strip()]
        if not sentences:
            return 0.0
        score = 0.3
        score += min(len(sentences), 5) * 0.1
        lengths = [len(s.split()) for s in sentences]
        if all(2 <= l <= 40 for l in lengths):
            score += 0.2
        return min(score, 1.0)


def emotional_flow(story: Story, scorer: VadScorer) -> list[VAPoint]:
    """One valence/arousal point per sentence, in order."""
    if scorer is None:
        raise ScorerUnavailableError("no valence/arousal scorer configured")
    pairs = scorer.score_sentences(list(story.sentences))
    if len(pairs) != len(story.sentences):
        raise ScorerUnavailableError("scorer returned wrong number of points")
    lo, hi = scorer.manifest.value_range
    points = []
    for i, (v, a) in enumerate(pairs):
        points.append(
            VAPoint(i, min(max(v, lo), hi), min(max(a, lo), hi))
        )
    return points


def story_likeness(story: Story, scorer: LikenessScorer) -> float:
    """Probability in [0, 1] that the text reads as a story."""
    if scorer is None:
        raise ScorerUnavailableError("no story-likeness scorer configured")
    value = scorer.score_text(" ".join(story.sentences))
    return min(max(float(value), 0.0), 1.0)


def is_story_like(score: float) -> bool:
    return score >= STORY_LIKE_THRESHOLD
