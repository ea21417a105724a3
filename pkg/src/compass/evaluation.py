"""Metrics and run harness: corpus BLEU, mean length, position metrics,
and adapters for external learned scorers."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

from .corruption import CorruptedExample
from .errors import AdapterUnavailableError, CompassError, EmptyCorpusError
from .pipeline import (
    PipelineConfig,
    complete_two_module,
    complete_v2,
    infer_insertions,
    predict_missing,
    run_end_to_end,
)
from .story import Story, render_story
from .tokens import GAP, encode_masked, parse_masked


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidates: list[str], references: list[str], max_n: int = 4) -> float:
    """Corpus-level BLEU, uniform 4-gram weights, brevity penalty, no smoothing.

    Whitespace tokenization; 0-100 scale. Single reference per candidate.
    """
    if len(candidates) != len(references):
        raise ValueError("candidates and references must have equal length")
    if not candidates:
        raise EmptyCorpusError("no candidate/reference pairs")
    clipped = [0] * max_n
    totals = [0] * max_n
    cand_len = 0
    ref_len = 0
    for cand, ref in zip(candidates, references):
        c_tokens = cand.split()
        r_tokens = ref.split()
        cand_len += len(c_tokens)
        ref_len += len(r_tokens)
        for n in range(1, max_n + 1):
            c_counts = _ngrams(c_tokens, n)
            r_counts = _ngrams(r_tokens, n)
            totals[n - 1] += sum(c_counts.values())
            clipped[n - 1] += sum(
                min(count, r_counts.get(gram, 0)) for gram, count in c_counts.items()
            )
    if any(t == 0 for t in totals) or any(c == 0 for c in clipped):
        return 0.0
    log_precision = sum(
        math.log(c / t) for c, t in zip(clipped, totals)
    ) / max_n
    bp = 1.0 if cand_len > ref_len else math.exp(1 - ref_len / max(cand_len, 1))
    if cand_len == 0:
        return 0.0
    return 100.0 * bp * math.exp(log_precision)


def position_metrics(pred, gold) -> dict[str, float]:
    """Set precision/recall/F1 over gap indices; empty vs empty counts as 1.0."""
    pred = set(pred)
    gold = set(gold)
    if any(i < 0 for i in pred | gold):
        raise ValueError("indices must be >= 0")
    exact = 1.0 if pred == gold else 0.0
    if not pred and not gold:
        return {"exact_match": 1.0, "precision": 1.0, "recall": 1.0, "f1": 1.0}
    tp = len(pred & gold)
    precision = tp / len(pred) if pred else 0.0
    recall = tp / len(gold) if gold else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return {"exact_match": exact, "precision": precision, "recall": recall, "f1": f1}


def mean_length(texts: list[str]) -> float:
    """Mean whitespace-token count."""
    if not texts:
        raise EmptyCorpusError("no texts")
    return sum(len(t.split()) for t in texts) / len(texts)


@runtime_checkable
class ExternalScorer(Protocol):
    name: str
    aggregate: str  # "threshold_ratio" (story-likeness style) or "mean"

    def score(self, candidates: list[str], references: list[str] | None) -> list[float]:
        ...


@dataclass
class MockScorer:
    name: str
    values: list[float] | float = 1.0
    aggregate: str = "mean"

    def score(self, candidates, references=None):
        if isinstance(self.values, (int, float)):
            return [float(self.values)] * len(candidates)
        if len(self.values) != len(candidates):
            raise ValueError("per-instance values length mismatch")
        return [float(v) for v in self.values]


def score_with_external(
    adapter: ExternalScorer,
    candidates: list[str],
    references: list[str] | None = None,
    threshold: float = 0.5,
) -> dict:
    """Per-instance scores plus the adapter's aggregate.

    threshold_ratio: fraction of instances scoring >= threshold; mean:
    arithmetic mean.
    """
    try:
        per_instance = adapter.score(candidates, references)
    except AdapterUnavailableError:
        raise
    except Exception as exc:
        raise AdapterUnavailableError(f"{adapter.name}: {exc}") from exc
    if adapter.aggregate == "threshold_ratio":
        aggregate = sum(1 for v in per_instance if v >= threshold) / len(per_instance)
    else:
        aggregate = sum(per_instance) / len(per_instance)
    return {"name": adapter.name, "per_instance": per_instance, "aggregate": aggregate}


@dataclass
class MetricReport:
    approach: str
    counts: int
    bleu: dict[str, float]
    mean_length: float
    position: dict[str, float]
    learned: dict[str, float] = field(default_factory=dict)
    errors: int = 0
    bleu_variant: str = "corpus-4gram-bp-nosmoothing"
    length_unit: str = "whitespace tokens"

    def to_dict(self) -> dict:
        return {
            "approach": self.approach,
            "counts": self.counts,
            "bleu": dict(self.bleu),
            "mean_length": self.mean_length,
            "position": dict(self.position),
            "learned": dict(self.learned),
            "errors": self.errors,
            "bleu_variant": self.bleu_variant,
            "length_unit": self.length_unit,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def evaluate_run(
    examples: list[CorruptedExample],
    config: PipelineConfig,
    adapters: list[ExternalScorer] | None = None,
) -> MetricReport:
    """Score a pipeline on a frozen corrupted split.

    Two-module variants evaluate the position module and the completion
    module separately, each against its own gold target; end_to_end is
    scored against the originals. Deterministic given split + backends.
    """
    if not examples:
        raise EmptyCorpusError("empty frozen split")
    errors = 0
    bleu_inputs: dict[str, tuple[list[str], list[str]]] = {}
    pos_rows: list[dict[str, float]] = []
    completed_texts: list[str] = []
    reference_texts: list[str] = []

    def add_pair(key: str, cand: str, ref: str):
        bleu_inputs.setdefault(key, ([], []))
        bleu_inputs[key][0].append(cand)
        bleu_inputs[key][1].append(ref)

    for ex in examples:
        incomplete_story = Story.make(ex.incomplete) if ex.incomplete else None
        gold_masked_text = encode_masked(ex.masked, config.missing_marker)
        original_text = render_story(ex.original)
        try:
            if config.approach in ("two_module", "two_module_v2"):
                if incomplete_story is None:
                    raise CompassError("empty incomplete story")
                pred = predict_missing(incomplete_story, config)
                pred_text = encode_masked(pred.masked, config.missing_marker)
                add_pair("vnmpp", pred_text, gold_masked_text)
                pos_rows.append(
                    position_metrics(
                        pred.masked.gap_element_indices,
                        ex.masked.gap_element_indices,
                    )
                )
                # Completion module scored on the gold masked input.
                if config.approach == "two_module":
                    cands, _ = complete_two_module(ex.masked, config)
                    completed = render_story(cands[0].story)
                else:
                    per_gap, _ = complete_v2(ex.masked, config)
                    sentences = []
                    gi = 0
                    for el in ex.masked.elements:
                        if el is GAP:
                            if gi < len(per_gap) and per_gap[gi]:
                                sentences.append(per_gap[gi][0].text)
                            gi += 1
                        else:
                            sentences.append(el)
                    completed = " ".join(sentences)
                add_pair("sc", completed, original_text)
            else:
                if incomplete_story is None:
                    raise CompassError("empty incomplete story")
                cands, _ = run_end_to_end(incomplete_story, config)
                completed = render_story(cands[0].story)
                add_pair("e2e", completed, original_text)
                pred_positions = infer_insertions(incomplete_story, cands[0].story)
                gold_positions = ex.masked.gap_element_indices
                pos_rows.append(position_metrics(pred_positions, gold_positions))
            completed_texts.append(completed)
            reference_texts.append(original_text)
        except CompassError:
            errors += 1

    if not completed_texts:
        raise EmptyCorpusError("every instance errored")

    bleu_scores = {key: bleu(c, r) for key, (c, r) in bleu_inputs.items()}
    position = {
        metric: _mean([row[metric] for row in pos_rows])
        for metric in ("exact_match", "precision", "recall", "f1")
    }
    learned: dict[str, float] = {}
    if adapters:
        for adapter in adapters:
            try:
                result = score_with_external(adapter, completed_texts, reference_texts)
                learned[result["name"]] = result["aggregate"]
            except AdapterUnavailableError:
                learned[adapter.name] = float("nan")
    return MetricReport(
        approach=config.approach,
        counts=len(completed_texts),
        bleu=bleu_scores,
        mean_length=mean_length(completed_texts),
        position=position,
        learned=learned,
        errors=errors,
    )
