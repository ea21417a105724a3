"""Sentence-removal corruption: masked and unmarked incomplete story views.

A corrupted example carries four synchronized views of one story: the
original, the sorted missing indices, the incomplete sentence list (markers
deleted), and the masked story (markers in place). Implementation order
follows the delete-then-insert-markers route.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import (
    DuplicateIndexError,
    IndexOutOfRangeError,
    InvalidPolicyError,
    TooManyVariantsError,
)
from .story import Corpus, Story
from .tokens import GAP, MaskedStory


@dataclass(frozen=True)
class CorruptionPolicy:
    """Uniform distribution over how many sentences to remove.

    The effective maximum for an n-sentence story is min(m_cap, n); with
    cap_by_length=False the cap is treated as a fixed upper bound (still
    never above n). forbid_empty additionally caps at n-1 so the incomplete
    story keeps at least one sentence.
    """

    m_min: int = 0
    m_cap: int = 2
    cap_by_length: bool = False
    forbid_empty: bool = False
    seed: int = 0

    def effective_max(self, n_sentences: int) -> int:
        m_max = min(self.m_cap, n_sentences)
        if self.forbid_empty:
            m_max = min(m_max, n_sentences - 1)
        return m_max

    def missing_count_range(self, n_sentences: int) -> range:
        m_max = self.effective_max(n_sentences)
        if m_max < self.m_min:
            raise InvalidPolicyError(
                f"empty range [{self.m_min}, {m_max}] for n={n_sentences}"
            )
        return range(self.m_min, m_max + 1)


ROC_POLICY = CorruptionPolicy(m_min=0, m_cap=2, cap_by_length=False)
CNNDM_POLICY = CorruptionPolicy(m_min=0, m_cap=9, cap_by_length=True)

POLICIES = {"roc": ROC_POLICY, "cnndm": CNNDM_POLICY}


@dataclass(frozen=True)
class CorruptedExample:
    original: Story
    missing_ids: tuple[int, ...]
    incomplete: tuple[str, ...]
    masked: MaskedStory
    targets: tuple[str, ...]

    @property
    def m(self) -> int:
        return len(self.missing_ids)


def derive_rng(seed: int, *keys) -> np.random.Generator:
    """Named splittable stream: stable hash of keys mixed into the seed."""
    digest = hashlib.blake2b(
        repr(keys).encode("utf-8"), digest_size=8
    ).digest()
    child = int.from_bytes(digest, "big")
    return np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), child]))


def sample_missing_count(
    n_sentences: int, policy: CorruptionPolicy, rng: np.random.Generator
) -> int:
    """Draw m uniformly from the policy's capped range."""
    r = policy.missing_count_range(n_sentences)
    return int(rng.integers(r.start, r.stop))


def corrupt(story: Story, missing_ids) -> CorruptedExample:
    """Remove the sentences at missing_ids, producing all four views."""
    n = len(story.sentences)
    ids = list(missing_ids)
    if len(set(ids)) != len(ids):
        raise DuplicateIndexError(f"duplicate indices in {ids}")
    for i in ids:
        if not 0 <= i < n:
            raise IndexOutOfRangeError(f"index {i} out of range for n={n}")
    ids = sorted(ids)
    id_set = set(ids)
    incomplete = tuple(s for i, s in enumerate(story.sentences) if i not in id_set)
    targets = tuple(story.sentences[i] for i in ids)
    elements = tuple(
        GAP if i in id_set else s for i, s in enumerate(story.sentences)
    )
    return CorruptedExample(
        original=story,
        missing_ids=tuple(ids),
        incomplete=incomplete,
        masked=MaskedStory(elements),
        targets=targets,
    )


def sample_corruption(
    story: Story, policy: CorruptionPolicy, rng: np.random.Generator
) -> CorruptedExample:
    """Draw m, then a uniform missing-id set without replacement."""
    n = len(story.sentences)
    m = sample_missing_count(n, policy, rng)
    ids = sorted(rng.choice(n, size=m, replace=False).tolist())
    return corrupt(story, ids)


def make_static_split(
    corpus: Corpus, policy: CorruptionPolicy, seed: int
) -> list[CorruptedExample]:
    """One frozen corruption per story; per-story derived rng streams."""
    if corpus.split not in ("dev", "test"):
        raise ValueError("static splits are for dev/test; train corrupts dynamically")
    examples = []
    for story in corpus.stories:
        rng = derive_rng(seed, corpus.split, story.story_id)
        examples.append(sample_corruption(story, policy, rng))
    return examples


def enumerate_corruptions(
    story: Story, policy: CorruptionPolicy, bound: int = 100_000
) -> list[CorruptedExample]:
    """Every admissible missing-id set, lexicographically ordered."""
    n = len(story.sentences)
    r = policy.missing_count_range(n)
    total = sum(math.comb(n, m) for m in r)
    if total > bound:
        raise TooManyVariantsError(f"{total} variants exceeds bound {bound}")
    examples = []
    for m in r:
        for ids in combinations(range(n), m):
            examples.append(corrupt(story, ids))
    return examples


def example_to_record(example: CorruptedExample) -> dict:
    return {
        "story_id": example.original.story_id,
        "missing_ids": list(example.missing_ids),
        "incomplete": list(example.incomplete),
        "targets": list(example.targets),
    }


def example_from_record(record: dict, language: str = "en") -> CorruptedExample:
    """Rebuild the full example; the original is recovered by re-insertion."""
    ids = list(record["missing_ids"])
    incomplete = list(record["incomplete"])
    targets = list(record["targets"])
    sentences = list(incomplete)
    for i, t in zip(sorted(ids), targets):
        sentences.insert(i, t)
    story = Story.make(sentences, story_id=str(record.get("story_id", "")), language=language)
    return corrupt(story, ids)


def save_frozen_split(examples, policy: CorruptionPolicy, seed: int, path, manifest_path=None):
    """Frozen corrupted-split JSONL plus a policy/seed manifest."""
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(example_to_record(ex), ensure_ascii=False) + "\n")
    if manifest_path is not None:
        manifest = {
            "policy": {
                "m_min": policy.m_min,
                "m_cap": policy.m_cap,
                "cap_by_length": policy.cap_by_length,
                "forbid_empty": policy.forbid_empty,
            },
            "seed": seed,
            "count": len(examples),
        }
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2)


def load_frozen_split(path) -> list[CorruptedExample]:
    examples = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                examples.append(example_from_record(json.loads(line)))
    return examples
