import json

import numpy as np
import pytest

from compass.errors import CorpusParseError, DuplicateIdError, EmptyInputError
from compass.story import (
    Corpus,
    Story,
    load_corpus,
    render_story,
    save_corpus,
    segment_text,
)

from conftest import random_sentence, random_story


def test_simple_terminals():
    assert segment_text("He went home. He slept.").sentences == (
        "He went home.",
        "He slept.",
    )


def test_evan_context_two_sentences():
    s = segment_text(
        "Evan had been saving for years. He went to the dealership and bought a really fancy BMW."
    )
    assert len(s.sentences) == 2


def test_abbreviation_protection():
    s = segment_text("Mr. Smith met Dr. Jones. They talked.")
    assert s.sentences == ("Mr. Smith met Dr. Jones.", "They talked.")


def test_exclamation_and_question():
    s = segment_text("Stop! Why? Because.")
    assert s.sentences == ("Stop!", "Why?", "Because.")


def test_whitespace_normalized():
    s = segment_text("  One   sentence\there.  Another\none. ")
    assert s.sentences == ("One sentence here.", "Another one.")


def test_empty_input_raises():
    with pytest.raises(EmptyInputError):
        segment_text("   \n\t ")


def test_segmentation_recovers_joined_sentences():
    rng = np.random.default_rng(7)
    for _ in range(200):
        sentences = [random_sentence(rng) for _ in range(int(rng.integers(1, 7)))]
        joined = " ".join(sentences)
        assert list(segment_text(joined).sentences) == sentences


def test_render_single():
    assert render_story(Story.make(["A."])) == "A."


def test_render_segment_round_trip():
    rng = np.random.default_rng(8)
    for _ in range(100):
        story = random_story(rng)
        assert segment_text(render_story(story)).sentences == story.sentences


def test_story_rejects_blank_sentence():
    with pytest.raises(ValueError):
        Story(("", "Fine."))


def test_corpus_duplicate_ids_rejected():
    a = Story.make(["One."], story_id="x")
    b = Story.make(["Two."], story_id="x")
    with pytest.raises(DuplicateIdError):
        Corpus(split="train", stories=(a, b))


def test_load_corpus_roundtrip(tmp_path):
    stories = tuple(
        Story.make([f"Sentence number {i}.", "It was fine."], story_id=f"s{i}")
        for i in range(3)
    )
    corpus = Corpus(split="dev", stories=stories, source="unit")
    path = tmp_path / "corpus.jsonl"
    save_corpus(corpus, path)
    loaded = load_corpus(path, split="dev", source="unit")
    assert loaded.stories == corpus.stories
    # byte-stable serialization
    path2 = tmp_path / "again.jsonl"
    save_corpus(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_load_corpus_reports_line_number(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text(
        json.dumps({"story_id": "a", "sentences": ["Ok."]})
        + "\n"
        + json.dumps({"story_id": "b", "sentences": ["", "Bad."]})
        + "\n"
    )
    with pytest.raises(CorpusParseError) as err:
        load_corpus(path, split="train")
    assert err.value.line_number == 2


def test_load_corpus_duplicate_id(tmp_path):
    path = tmp_path / "dup.jsonl"
    record = json.dumps({"story_id": "a", "sentences": ["Ok."]})
    path.write_text(record + "\n" + record + "\n")
    with pytest.raises(DuplicateIdError):
        load_corpus(path, split="train")
