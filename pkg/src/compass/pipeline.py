"""Orchestration of the three completion approaches.

two_module: a missing-position backend rewrites the incomplete story with
gap markers, then a completion backend rewrites the whole story.
two_module_v2: the completion backend emits only the missing sentences
(completion-marker protocol), so user context is preserved verbatim.
end_to_end: a single seq2seq maps incomplete story to complete story.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from difflib import SequenceMatcher

from .backend import Backend, Candidate, GenerationParams
from .errors import (
    AllCandidatesMalformedError,
    BackendUnavailableError,
    CompassError,
    EmptyInputError,
)
from .story import Story, render_story, segment_text
from .tokens import (
    COMPLETION_MARKER,
    GAP,
    MISSING_MARKER,
    Diagnostic,
    MaskedStory,
    encode_masked,
    masked_from_sentences,
    parse_completion_output,
    parse_masked,
)

APPROACHES = ("two_module", "two_module_v2", "end_to_end")

SIMILARITY_THRESHOLD = 0.5


@dataclass
class PipelineConfig:
    approach: str
    vnmpp_backend: Backend | None = None
    sc_backend: Backend | None = None
    params: GenerationParams = field(default_factory=GenerationParams)
    missing_marker: str = MISSING_MARKER
    completion_marker: str = COMPLETION_MARKER

    def __post_init__(self):
        if self.approach not in APPROACHES:
            raise ValueError(f"unknown approach: {self.approach}")
        if self.approach in ("two_module", "two_module_v2"):
            if self.vnmpp_backend is None or self.sc_backend is None:
                raise ValueError(f"{self.approach} needs both backends")
        elif self.sc_backend is None:
            raise ValueError("end_to_end needs sc_backend")

    @property
    def backends(self) -> list[Backend]:
        return [b for b in (self.vnmpp_backend, self.sc_backend) if b is not None]


@dataclass(frozen=True)
class StoryCandidate:
    story: Story
    score: float


@dataclass
class PredictResult:
    masked: MaskedStory  # gaps mapped onto the input's own sentences
    diagnostics: list[Diagnostic] = field(default_factory=list)


@dataclass
class AssistResult:
    input_story: Story
    gap_positions: tuple[int, ...]  # indices into the completed story (masked element indices)
    candidates_per_gap: list[list[Candidate]]
    best_completion: Story
    story_likeness: float | None = None
    flow_before: list | None = None
    flow_after: list | None = None
    diagnostics: list[Diagnostic] = field(default_factory=list)


def sentence_similarity(a: str, b: str) -> float:
    if a == b:
        return 1.0
    return SequenceMatcher(None, a, b).ratio()


def lcs_align(pred: list[str], ref: list[str], threshold: float = SIMILARITY_THRESHOLD):
    """Order-preserving alignment maximizing total similarity of matched pairs.

    Returns a list of (pred_index, ref_index) pairs; only pairs with
    similarity >= threshold participate.
    """
    np_, nr = len(pred), len(ref)
    if np_ == 0 or nr == 0:
        return []
    sim = [[sentence_similarity(p, r) for r in ref] for p in pred]
    score = [[0.0] * (nr + 1) for _ in range(np_ + 1)]
    for i in range(1, np_ + 1):
        for j in range(1, nr + 1):
            best = max(score[i - 1][j], score[i][j - 1])
            if sim[i - 1][j - 1] >= threshold:
                best = max(best, score[i - 1][j - 1] + sim[i - 1][j - 1])
            score[i][j] = best
    pairs = []
    i, j = np_, nr
    while i > 0 and j > 0:
        if (
            sim[i - 1][j - 1] >= threshold
            and abs(score[i][j] - (score[i - 1][j - 1] + sim[i - 1][j - 1])) < 1e-12
        ):
            pairs.append((i - 1, j - 1))
            i -= 1
            j -= 1
        elif score[i - 1][j] >= score[i][j - 1]:
            i -= 1
        else:
            j -= 1
    pairs.reverse()
    return pairs


def predict_missing(incomplete: Story, config: PipelineConfig) -> PredictResult:
    """Run the missing-position backend and map its gaps onto the input.

    Generated paraphrases of context sentences are discarded in favor of
    the originals; if nothing aligns, falls back to zero gaps.
    """
    backend = config.vnmpp_backend
    candidates = backend.generate(render_story(incomplete), config.params)
    parse = parse_masked(candidates[0].text, config.missing_marker)
    diagnostics = list(parse.diagnostics)

    pred_elements = parse.masked.elements
    pred_sentences = [el for el in pred_elements if el is not GAP]
    pairs = lcs_align(pred_sentences, list(incomplete.sentences))

    if pred_sentences and not pairs:
        diagnostics.append(
            Diagnostic(
                "ReconciliationFailure",
                "no generated context sentence aligns to the input; assuming zero gaps",
            )
        )
        return PredictResult(MaskedStory(incomplete.sentences), diagnostics)

    matched = dict(pairs)  # pred sentence index -> input index
    positions = []
    sent_idx = 0
    element_sent_index = []
    for el in pred_elements:
        element_sent_index.append(None if el is GAP else sent_idx)
        if el is not GAP:
            sent_idx += 1
    for k, el in enumerate(pred_elements):
        if el is not GAP:
            continue
        insert_at = len(incomplete.sentences)
        for later in element_sent_index[k + 1 :]:
            if later is not None and later in matched:
                insert_at = matched[later]
                break
        positions.append(insert_at)
    masked = masked_from_sentences(incomplete.sentences, positions)
    return PredictResult(masked, diagnostics)


def complete_two_module(
    masked: MaskedStory, config: PipelineConfig
) -> tuple[list[StoryCandidate], list[Diagnostic]]:
    """Whole-story rewrite filling the marked gaps.

    Candidates whose sentence count mismatches the masked layout are
    repaired by aligning their sentences to the context, or dropped.
    """
    diagnostics: list[Diagnostic] = []
    if masked.num_gaps == 0:
        return [StoryCandidate(Story.make(masked.context_sentences), 0.0)], diagnostics

    raw = config.sc_backend.generate(
        encode_masked(masked, config.missing_marker), config.params
    )
    expected = len(masked.elements)
    context = list(masked.context_sentences)
    out: list[StoryCandidate] = []
    for cand in raw:
        try:
            sentences = list(segment_text(cand.text).sentences)
        except EmptyInputError:
            diagnostics.append(Diagnostic("EmptyCandidate", "candidate had no text"))
            continue
        if len(sentences) == expected:
            out.append(StoryCandidate(Story.make(sentences), cand.score))
            continue
        pairs = lcs_align(sentences, context)
        matched_pred = {i for i, _ in pairs}
        unmatched = [s for i, s in enumerate(sentences) if i not in matched_pred]
        if len(unmatched) == masked.num_gaps:
            rebuilt = []
            gi = 0
            matched_ref = {j: sentences[i] for i, j in pairs}
            ci = 0
            for el in masked.elements:
                if el is GAP:
                    rebuilt.append(unmatched[gi])
                    gi += 1
                else:
                    rebuilt.append(matched_ref.get(ci, el))
                    ci += 1
            out.append(StoryCandidate(Story.make(rebuilt), cand.score))
            diagnostics.append(
                Diagnostic("RepairedCandidate", f"realigned {len(sentences)} sentences")
            )
        else:
            diagnostics.append(
                Diagnostic(
                    "DroppedCandidate",
                    f"{len(sentences)} sentences for {expected} slots, repair failed",
                )
            )
    if not out:
        raise AllCandidatesMalformedError("no completion candidate survived repair")
    return out, diagnostics


def complete_v2(
    masked: MaskedStory, config: PipelineConfig
) -> tuple[list[list[Candidate]], list[Diagnostic]]:
    """Per-gap candidate lists; context sentences untouched by construction."""
    diagnostics: list[Diagnostic] = []
    n_gaps = masked.num_gaps
    if n_gaps == 0:
        return [], diagnostics
    raw = config.sc_backend.generate(
        encode_masked(masked, config.missing_marker), config.params
    )
    per_gap: list[dict[str, float]] = [{} for _ in range(n_gaps)]
    for cand in raw:
        parse = parse_completion_output(cand.text, n_gaps, config.completion_marker)
        diagnostics.extend(parse.diagnostics)
        for j, sentence in enumerate(parse.completions.sentences):
            prev = per_gap[j].get(sentence)
            if prev is None or cand.score > prev:
                per_gap[j][sentence] = cand.score
    return [
        [Candidate(t, s) for t, s in sorted(bucket.items(), key=lambda kv: -kv[1])]
        for bucket in per_gap
    ], diagnostics


def run_end_to_end(
    incomplete: Story, config: PipelineConfig
) -> tuple[list[StoryCandidate], list[Diagnostic]]:
    """Single-shot incomplete-story to complete-story generation."""
    diagnostics: list[Diagnostic] = []
    raw = config.sc_backend.generate(render_story(incomplete), config.params)
    out = []
    for cand in raw:
        try:
            sentences = segment_text(cand.text).sentences
        except EmptyInputError:
            diagnostics.append(Diagnostic("EmptyCandidate", "candidate had no text"))
            continue
        out.append(StoryCandidate(Story.make(sentences), cand.score))
    if not out:
        raise AllCandidatesMalformedError("every end-to-end candidate was empty")
    return out, diagnostics


def infer_insertions(input_story: Story, output_story: Story) -> tuple[int, ...]:
    """Output-story indices of sentences absent from the input."""
    out_sents = list(output_story.sentences)
    matched = {i for i, _ in lcs_align(out_sents, list(input_story.sentences))}
    return tuple(i for i in range(len(out_sents)) if i not in matched)


@dataclass
class Scorers:
    likeness: object | None = None  # story_likeness scorer
    vad: object | None = None  # valence/arousal scorer


def _gap_fill_from_story(story: Story, masked: MaskedStory) -> list[str]:
    """Sentences at the gap slots of a repaired full-story candidate."""
    return [
        story.sentences[i]
        for i in masked.gap_element_indices
        if i < len(story.sentences)
    ]


def assist(
    raw_text: str,
    config: PipelineConfig,
    scorers: Scorers | None = None,
    params: GenerationParams | None = None,
) -> AssistResult:
    """Segment, run the configured approach, attach affect scores.

    Module errors become diagnostics; any segmentable input yields a
    well-formed result.
    """
    if params is not None:
        config = PipelineConfig(
            approach=config.approach,
            vnmpp_backend=config.vnmpp_backend,
            sc_backend=config.sc_backend,
            params=params,
            missing_marker=config.missing_marker,
            completion_marker=config.completion_marker,
        )
    story = segment_text(raw_text)
    diagnostics: list[Diagnostic] = []
    gap_positions: tuple[int, ...] = ()
    candidates_per_gap: list[list[Candidate]] = []
    best = story

    try:
        if config.approach == "two_module_v2":
            pred = predict_missing(story, config)
            diagnostics.extend(pred.diagnostics)
            masked = pred.masked
            gap_positions = masked.gap_element_indices
            candidates_per_gap, d = complete_v2(masked, config)
            diagnostics.extend(d)
            completed = []
            gi = 0
            for el in masked.elements:
                if el is GAP:
                    if gi < len(candidates_per_gap) and candidates_per_gap[gi]:
                        completed.append(candidates_per_gap[gi][0].text)
                    gi += 1
                else:
                    completed.append(el)
            best = Story.make(completed)
        elif config.approach == "two_module":
            pred = predict_missing(story, config)
            diagnostics.extend(pred.diagnostics)
            masked = pred.masked
            gap_positions = masked.gap_element_indices
            if masked.num_gaps == 0:
                best = story
            else:
                cands, d = complete_two_module(masked, config)
                diagnostics.extend(d)
                best = cands[0].story
                buckets: list[dict[str, float]] = [{} for _ in range(masked.num_gaps)]
                for sc in cands:
                    fills = _gap_fill_from_story(sc.story, masked)
                    for j, text in enumerate(fills):
                        prev = buckets[j].get(text)
                        if prev is None or sc.score > prev:
                            buckets[j][text] = sc.score
                candidates_per_gap = [
                    [Candidate(t, s) for t, s in sorted(b.items(), key=lambda kv: -kv[1])]
                    for b in buckets
                ]
        else:  # end_to_end
            cands, d = run_end_to_end(story, config)
            diagnostics.extend(d)
            best = cands[0].story
            gap_positions = infer_insertions(story, best)
            buckets = [{} for _ in range(len(gap_positions))]
            for sc in cands:
                if infer_insertions(story, sc.story) != gap_positions:
                    continue
                matched = {i for i, _ in lcs_align(list(sc.story.sentences), list(story.sentences))}
                fills = [s for i, s in enumerate(sc.story.sentences) if i not in matched]
                for j, text in enumerate(fills):
                    prev = buckets[j].get(text)
                    if prev is None or sc.score > prev:
                        buckets[j][text] = sc.score
            candidates_per_gap = [
                [Candidate(t, s) for t, s in sorted(b.items(), key=lambda kv: -kv[1])]
                for b in buckets
            ]
    except BackendUnavailableError:
        raise
    except CompassError as exc:
        diagnostics.append(Diagnostic("PipelineError", f"{type(exc).__name__}: {exc}"))
        gap_positions = ()
        candidates_per_gap = []
        best = story

    result = AssistResult(
        input_story=story,
        gap_positions=gap_positions,
        candidates_per_gap=candidates_per_gap,
        best_completion=best,
        diagnostics=diagnostics,
    )
    if scorers is not None:
        from .affect import emotional_flow, story_likeness

        try:
            if scorers.likeness is not None:
                result.story_likeness = story_likeness(best, scorers.likeness)
            if scorers.vad is not None:
                result.flow_before = emotional_flow(story, scorers.vad)
                result.flow_after = emotional_flow(best, scorers.vad)
        except CompassError as exc:
            result.diagnostics.append(
                Diagnostic("ScorerError", f"{type(exc).__name__}: {exc}")
            )
    return result
