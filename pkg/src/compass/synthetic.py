"""Templated synthetic stories with position-identifying verbs.

Each sentence slot of a five-sentence story draws from its own verb and
noun pools, so the slot a sentence belongs to can be read off its verb.
That makes gold corruptions computable analytically, which powers the
template oracle backends and the desk-scale learnability harness.
"""

from __future__ import annotations

import numpy as np

from .backend import OracleBackend
from .corruption import CorruptedExample, corrupt
from .story import Corpus, Story, render_story, segment_text
from .tokens import (
    COMPLETION_MARKER,
    MISSING_MARKER,
    encode_completion_target,
    encode_masked,
)

NAMES = [
    "anna", "ben", "carla", "dan", "ella", "finn", "grace", "hugo",
    "iris", "jack", "kara", "liam", "mona", "nick", "olga", "pete",
]

# One verb pool per sentence slot; pools are disjoint.
SLOT_VERBS = [
    ["visited", "entered", "found"],
    ["cleaned", "painted", "fixed"],
    ["dropped", "carried", "grabbed"],
    ["sold", "bought", "traded"],
    ["enjoyed", "remembered", "missed"],
]

SLOT_NOUNS = [
    ["park", "shop", "house"],
    ["door", "fence", "wall"],
    ["box", "lamp", "chair"],
    ["bike", "car", "boat"],
    ["trip", "day", "gift"],
]

VERB_TO_SLOT = {v: i for i, pool in enumerate(SLOT_VERBS) for v in pool}

N_SLOTS = len(SLOT_VERBS)


def make_sentence(name: str, slot: int, rng: np.random.Generator) -> str:
    verb = SLOT_VERBS[slot][int(rng.integers(len(SLOT_VERBS[slot])))]
    noun = SLOT_NOUNS[slot][int(rng.integers(len(SLOT_NOUNS[slot])))]
    return f"{name} {verb} the {noun} ."


def make_story(story_id: str, rng: np.random.Generator) -> Story:
    name = NAMES[int(rng.integers(len(NAMES)))]
    return Story.make(
        [make_sentence(name, slot, rng) for slot in range(N_SLOTS)],
        story_id=story_id,
    )


def make_corpus(n_stories: int, seed: int, split: str = "train") -> Corpus:
    rng = np.random.default_rng(seed)
    stories = tuple(make_story(f"{split}-{i:05d}", rng) for i in range(n_stories))
    return Corpus(split=split, stories=stories, source="synthetic-templates")


def slot_of_sentence(sentence: str) -> int:
    """Read the slot index off the sentence's verb; -1 if unrecognized."""
    parts = sentence.split()
    if len(parts) < 2:
        return -1
    return VERB_TO_SLOT.get(parts[1], -1)


def infer_gold_example(incomplete_text: str) -> CorruptedExample | None:
    """Reconstruct the gold corruption of a templated incomplete story.

    Missing slots are the template slots with no surviving sentence. The
    removed sentences themselves are not recoverable, so targets are
    canonical placeholders; callers that need true targets should build
    mapping oracles from known stories instead.
    """
    sentences = segment_text(incomplete_text).sentences
    slots = [slot_of_sentence(s) for s in sentences]
    if any(s < 0 for s in slots) or len(set(slots)) != len(slots):
        return None
    name = sentences[0].split()[0] if sentences else NAMES[0]
    present = dict(zip(slots, sentences))
    full = []
    for slot in range(N_SLOTS):
        if slot in present:
            full.append(present[slot])
        else:
            full.append(f"{name} {SLOT_VERBS[slot][0]} the {SLOT_NOUNS[slot][0]} .")
    story = Story.make(full)
    missing = [slot for slot in range(N_SLOTS) if slot not in present]
    return corrupt(story, missing)


def template_vnmpp_oracle() -> OracleBackend:
    """Analytic missing-position oracle for templated incomplete stories."""

    def answer(incomplete_text: str) -> str | None:
        gold = infer_gold_example(incomplete_text)
        if gold is None:
            return None
        return encode_masked(gold.masked, MISSING_MARKER)

    return OracleBackend(answer, role="vnmpp")


def mapping_oracles_for_examples(examples) -> dict[str, dict[str, str]]:
    """Exact input→output maps for all four roles over known corruptions."""
    vnmpp, sc, sc_v2, e2e = {}, {}, {}, {}
    for ex in examples:
        incomplete_text = " ".join(ex.incomplete)
        masked_text = encode_masked(ex.masked)
        original_text = render_story(ex.original)
        vnmpp[incomplete_text] = masked_text
        sc[masked_text] = original_text
        sc_v2[masked_text] = encode_completion_target(ex.targets, COMPLETION_MARKER)
        e2e[incomplete_text] = original_text
    return {"vnmpp": vnmpp, "sc": sc, "sc_v2": sc_v2, "end_to_end": e2e}
