"""Sentence-segmented story data model and JSONL corpus ingestion."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import CorpusParseError, DuplicateIdError, EmptyInputError

# Lowercased abbreviations that do not end a sentence when followed by a period.
_ABBREVIATIONS = {
    "mr", "mrs", "ms", "dr", "prof", "rev", "gen", "sen", "rep", "st",
    "jr", "sr", "vs", "etc", "approx", "dept", "est", "fig", "inc",
    "ltd", "co", "corp", "ave", "blvd", "rd", "mt", "e.g", "i.e",
    "a.m", "p.m", "u.s", "u.k", "ph.d", "no",
}

_TERMINALS = ".!?"
_CLOSERS = "\"')’”]"


@dataclass(frozen=True)
class Story:
    """An ordered list of non-empty sentences."""

    sentences: tuple[str, ...]
    story_id: str = ""
    language: str = "en"

    def __post_init__(self):
        for s in self.sentences:
            if not s or s != s.strip():
                raise ValueError(f"sentence must be non-empty and stripped: {s!r}")

    @classmethod
    def make(cls, sentences, story_id: str = "", language: str = "en") -> "Story":
        return cls(tuple(s.strip() for s in sentences), story_id, language)

    def __len__(self) -> int:
        return len(self.sentences)


@dataclass(frozen=True)
class Corpus:
    split: str  # train | dev | test
    stories: tuple[Story, ...]
    source: str = ""

    def __post_init__(self):
        if self.split not in ("train", "dev", "test"):
            raise ValueError(f"unknown split: {self.split}")
        seen = set()
        for s in self.stories:
            if s.story_id in seen:
                raise DuplicateIdError(f"duplicate story_id: {s.story_id}")
            seen.add(s.story_id)

    def __len__(self) -> int:
        return len(self.stories)


def _normalize_whitespace(text: str) -> str:
    return " ".join(text.split())


def _word_before(text: str, dot_index: int) -> str:
    j = dot_index
    while j > 0 and (text[j - 1].isalnum() or text[j - 1] == "."):
        j -= 1
    return text[j:dot_index]


def segment_text(raw_text: str, language: str = "en") -> Story:
    """Split raw text into sentences on terminal punctuation.

    Boundaries are ., ! or ? (plus trailing closing quotes/brackets) followed
    by a space; periods after known abbreviations do not split. Internal
    whitespace runs are collapsed to single spaces.
    """
    text = _normalize_whitespace(raw_text)
    if not text:
        raise EmptyInputError("input is empty after whitespace stripping")

    sentences = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch not in _TERMINALS:
            i += 1
            continue
        j = i
        while j + 1 < n and text[j + 1] in _TERMINALS:
            j += 1
        while j + 1 < n and text[j + 1] in _CLOSERS:
            j += 1
        if j + 1 >= n:
            sentences.append(text[start:].strip())
            start = n
            break
        if text[j + 1] != " ":
            i = j + 1
            continue
        if ch == "." and j == i:
            word = _word_before(text, i).lower()
            if word and (word in _ABBREVIATIONS or word.rstrip(".") in _ABBREVIATIONS):
                i = j + 2
                continue
        sentences.append(text[start : j + 1].strip())
        start = j + 2
        i = j + 2
    if start < n:
        tail = text[start:].strip()
        if tail:
            sentences.append(tail)
    return Story.make([s for s in sentences if s], language=language)


def render_story(story: Story) -> str:
    """Join sentences with single spaces."""
    return " ".join(story.sentences)


def story_to_record(story: Story) -> dict:
    return {
        "story_id": story.story_id,
        "sentences": list(story.sentences),
        "language": story.language,
    }


def story_from_record(record: dict) -> Story:
    sentences = record.get("sentences")
    if not isinstance(sentences, list) or not sentences:
        raise ValueError("'sentences' must be a non-empty list")
    for s in sentences:
        if not isinstance(s, str) or not s.strip():
            raise ValueError("every sentence must be a non-empty string")
    return Story.make(
        sentences,
        story_id=str(record.get("story_id", "")),
        language=str(record.get("language", "en")),
    )


def load_corpus(path, split: str = "train", source: str = "", fmt: str = "jsonl") -> Corpus:
    """Load a JSONL corpus; malformed records are reported with line numbers."""
    if fmt != "jsonl":
        raise ValueError(f"unsupported format: {fmt}")
    stories = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                story = story_from_record(record)
            except (json.JSONDecodeError, ValueError) as exc:
                raise CorpusParseError(lineno, str(exc)) from exc
            if story.story_id in seen:
                raise DuplicateIdError(
                    f"line {lineno}: duplicate story_id {story.story_id}"
                )
            seen.add(story.story_id)
            stories.append(story)
    return Corpus(split=split, stories=tuple(stories), source=source)


def save_corpus(corpus: Corpus, path) -> None:
    """Write a corpus as one JSON object per line; byte-stable for equal inputs."""
    with open(path, "w", encoding="utf-8") as fh:
        for story in corpus.stories:
            fh.write(json.dumps(story_to_record(story), ensure_ascii=False) + "\n")
