import numpy as np
import pytest

from compass.story import Story

# Golden fixture used across modules.
EVAN_SENTENCES = (
    "Evan had been saving for years.",
    "He went to the dealership and bought a really fancy BMW.",
    "Evan was so proud of his new car.",
    "He showed it off around town.",
    "Evan knew he looked cool in the new car.",
)

EVAN_VNMPP_OUTPUT = (
    "<missing_sentence> He went to the dealership and bought a really fancy BMW. "
    "He showed it off around town. <missing_sentence> Evan knew he looked cool in the new car."
)

_WORDS = [
    "river", "stone", "lantern", "garden", "window", "letter", "train",
    "meadow", "candle", "bridge", "harbor", "forest", "market", "tower",
]


def random_sentence(rng: np.random.Generator) -> str:
    n = int(rng.integers(3, 9))
    words = [(_WORDS[int(rng.integers(len(_WORDS)))]) for _ in range(n)]
    words[0] = words[0].capitalize()
    return " ".join(words) + "."


def random_story(rng: np.random.Generator, min_n: int = 1, max_n: int = 8) -> Story:
    n = int(rng.integers(min_n, max_n + 1))
    return Story.make([random_sentence(rng) for _ in range(n)])


@pytest.fixture
def evan_story() -> Story:
    return Story.make(EVAN_SENTENCES, story_id="evan")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
