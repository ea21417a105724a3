"""Token protocols between structured gap data and flat model sequences.

Two wire formats:
  * masked format — sentences interleaved with a gap marker token
    ("<missing_sentence>" by default), e.g.
    ``<missing_sentence> He went home. <missing_sentence> He slept.``
  * completion format — one marker before each generated sentence, e.g.
    ``<completion> First missing. <completion> Second missing.``

Parsers are total: arbitrary model output degrades to a best-effort parse
plus diagnostics, never an exception.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import EmptyInputError, MarkerCollisionError, TooManyCompletionsError
from .story import Story, segment_text

MISSING_MARKER = "<missing_sentence>"
COMPLETION_MARKER = "<completion>"


class _Gap:
    """Sentinel for a gap element in a masked story."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "GAP"


GAP = _Gap()


@dataclass(frozen=True)
class MaskedStory:
    """Ordered sentences and gap markers; adjacent gaps are permitted."""

    elements: tuple  # str sentences and GAP sentinels

    def __post_init__(self):
        for el in self.elements:
            if el is GAP:
                continue
            if not isinstance(el, str) or not el.strip():
                raise ValueError(f"sentence element must be non-empty: {el!r}")

    @property
    def gap_element_indices(self) -> tuple[int, ...]:
        return tuple(i for i, el in enumerate(self.elements) if el is GAP)

    @property
    def gap_insert_positions(self) -> tuple[int, ...]:
        """Insert-before indices into the gap-free sentence list."""
        positions = []
        seen_sentences = 0
        for el in self.elements:
            if el is GAP:
                positions.append(seen_sentences)
            else:
                seen_sentences += 1
        return tuple(positions)

    @property
    def context_sentences(self) -> tuple[str, ...]:
        return tuple(el for el in self.elements if el is not GAP)

    @property
    def num_gaps(self) -> int:
        return sum(1 for el in self.elements if el is GAP)


def masked_from_element_indices(sentences, gap_element_indices) -> MaskedStory:
    """Build a MaskedStory from gap-free sentences plus element indices.

    Element indices are positions in the final interleaved sequence, i.e.
    where the filled sentences will sit in the completed story.
    """
    indices = sorted(gap_element_indices)
    n_total = len(sentences) + len(indices)
    if any(not 0 <= g < n_total for g in indices):
        raise ValueError(f"gap element indices {indices} out of range for {n_total} elements")
    if len(set(indices)) != len(indices):
        raise ValueError(f"duplicate gap element indices: {indices}")
    gap_set = set(indices)
    elements = []
    si = 0
    for k in range(n_total):
        if k in gap_set:
            elements.append(GAP)
        else:
            elements.append(sentences[si])
            si += 1
    return MaskedStory(tuple(elements))


def masked_from_sentences(sentences, gap_insert_positions) -> MaskedStory:
    """Build a MaskedStory from gap-free sentences plus insert-before indices."""
    positions = sorted(gap_insert_positions)
    elements = []
    pi = 0
    for i, s in enumerate(sentences):
        while pi < len(positions) and positions[pi] == i:
            elements.append(GAP)
            pi += 1
        elements.append(s)
    while pi < len(positions):
        elements.append(GAP)
        pi += 1
    return MaskedStory(tuple(elements))


@dataclass(frozen=True)
class CompletionSequence:
    sentences: tuple[str, ...]

    def __post_init__(self):
        for s in self.sentences:
            if not s.strip():
                raise ValueError("completion sentences must be non-empty")

    def __len__(self) -> int:
        return len(self.sentences)


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    detail: str = ""


@dataclass
class MaskedParse:
    masked: MaskedStory
    diagnostics: list[Diagnostic] = field(default_factory=list)


@dataclass
class CompletionParse:
    completions: CompletionSequence
    diagnostics: list[Diagnostic] = field(default_factory=list)


def _check_collision(texts, marker: str) -> None:
    for t in texts:
        if marker in t:
            raise MarkerCollisionError(f"text contains marker {marker!r}: {t!r}")


def encode_masked(masked: MaskedStory, marker: str = MISSING_MARKER) -> str:
    """Render a masked story as a flat string, gaps as the marker token."""
    _check_collision(masked.context_sentences, marker)
    return " ".join(marker if el is GAP else el for el in masked.elements)


def parse_masked(sequence: str, marker: str = MISSING_MARKER) -> MaskedParse:
    """Inverse of encode_masked, tolerant of malformed model output.

    Markers become gaps; the text between markers is sentence-segmented.
    Never raises: missing separator spaces and similar damage produce
    diagnostics instead.
    """
    diagnostics = []
    elements = []
    pos = 0
    for match in re.finditer(re.escape(marker), sequence):
        start, end = match.span()
        before = sequence[pos:start]
        if before and not before[-1].isspace() and before.strip():
            diagnostics.append(
                Diagnostic("MalformedSpacing", f"marker glued to text at offset {start}")
            )
        chunk = before.strip()
        if chunk:
            try:
                elements.extend(segment_text(chunk).sentences)
            except EmptyInputError:
                pass
        elements.append(GAP)
        if end < len(sequence) and not sequence[end].isspace():
            diagnostics.append(
                Diagnostic("MalformedSpacing", f"marker glued to text at offset {end}")
            )
        pos = end
    tail = sequence[pos:].strip()
    if tail:
        try:
            elements.extend(segment_text(tail).sentences)
        except EmptyInputError:
            pass
    return MaskedParse(MaskedStory(tuple(elements)), diagnostics)


def encode_completion_target(targets, marker: str = COMPLETION_MARKER) -> str:
    """One marker before each target sentence; empty target list encodes as ""."""
    targets = list(targets)
    _check_collision(targets, marker)
    return " ".join(f"{marker} {t}" for t in targets)


def parse_completion_output(
    sequence: str, expected_gaps: int, marker: str = COMPLETION_MARKER
) -> CompletionParse:
    """Split generated output on completion markers.

    Over-generation truncates extras; under-generation returns what exists
    and reports the unfilled gap indices (later gaps stay unfilled first).
    """
    if expected_gaps < 0:
        raise ValueError("expected_gaps must be >= 0")
    diagnostics = []
    parts = [p.strip() for p in sequence.split(marker)]
    sentences = [p for p in parts if p]
    if len(sentences) > expected_gaps:
        diagnostics.append(
            Diagnostic(
                "OverGenerated",
                f"got {len(sentences)} completions for {expected_gaps} gaps; extras dropped",
            )
        )
        sentences = sentences[:expected_gaps]
    elif len(sentences) < expected_gaps:
        unfilled = list(range(len(sentences), expected_gaps))
        diagnostics.append(
            Diagnostic(
                "UnderGenerated",
                f"unfilled gap indices: {unfilled}",
            )
        )
    return CompletionParse(CompletionSequence(tuple(sentences)), diagnostics)


def splice(masked: MaskedStory, completions: CompletionSequence) -> Story:
    """Replace gaps in order with completion sentences.

    Earlier gaps are filled first; any unfilled trailing gaps are removed.
    """
    n_gaps = masked.num_gaps
    if len(completions) > n_gaps:
        raise TooManyCompletionsError(
            f"{len(completions)} completions for {n_gaps} gaps"
        )
    sentences = []
    gi = 0
    for el in masked.elements:
        if el is GAP:
            if gi < len(completions.sentences):
                sentences.append(completions.sentences[gi])
            gi += 1
        else:
            sentences.append(el)
    return Story.make(sentences)
