import math
from collections import Counter

import numpy as np
import pytest

from compass.backend import make_oracle_backend
from compass.corruption import ROC_POLICY, make_static_split
from compass.errors import EmptyCorpusError
from compass.evaluation import (
    MockScorer,
    bleu,
    evaluate_run,
    mean_length,
    position_metrics,
    score_with_external,
)
from compass.pipeline import PipelineConfig
from compass.synthetic import make_corpus, mapping_oracles_for_examples

from conftest import random_sentence


def reference_bleu(candidates, references, max_n=4):
    """Independent brute-force clipped-n-gram implementation (the oracle).

    Written directly from the metric definition: modified n-gram precision
    via exhaustive clipped counting, geometric mean, brevity penalty.
    """
    p_log_sum = 0.0
    c_len = sum(len(c.split()) for c in candidates)
    r_len = sum(len(r.split()) for r in references)
    for n in range(1, max_n + 1):
        matched = 0
        total = 0
        for cand, ref in zip(candidates, references):
            c = cand.split()
            r = ref.split()
            c_ngrams = [tuple(c[i : i + n]) for i in range(len(c) - n + 1)]
            r_ngrams = [tuple(r[i : i + n]) for i in range(len(r) - n + 1)]
            total += len(c_ngrams)
            ref_counts = Counter(r_ngrams)
            for gram, count in Counter(c_ngrams).items():
                matched += min(count, ref_counts[gram])
        if total == 0 or matched == 0:
            return 0.0
        p_log_sum += math.log(matched / total)
    bp = 1.0 if c_len > r_len else math.exp(1 - r_len / c_len)
    return 100.0 * bp * math.exp(p_log_sum / max_n)


def test_bleu_perfect_match():
    texts = ["the cat sat on the mat today", "a long walk by the river bank"]
    assert bleu(texts, texts) == 100.0


def test_bleu_equals_brute_force_oracle():
    rng = np.random.default_rng(31)
    cands, refs = [], []
    for _ in range(50):
        cands.append(" ".join(random_sentence(rng) for _ in range(2)))
        refs.append(" ".join(random_sentence(rng) for _ in range(2)))
    assert abs(bleu(cands, refs) - reference_bleu(cands, refs)) < 1e-9
    # also on partially overlapping pairs
    pairs = [(r, r.replace("the", "a")) for r in refs]
    cands2 = [p[1] for p in pairs]
    assert abs(bleu(cands2, refs) - reference_bleu(cands2, refs)) < 1e-9


def test_bleu_clipped_unigram():
    # clipped unigram precision 2/4; higher-order grams all miss -> 0 overall
    assert bleu(["the the the the"], ["the cat is on the mat"]) == 0.0
    assert reference_bleu(["the the the the"], ["the cat is on the mat"]) == 0.0


def test_bleu_range_and_monotonicity():
    base = ["one two three four five"] * 3
    score = bleu(base, base)
    assert score == 100.0
    more = base + ["one two three four five"]
    assert bleu(more, more) >= score


def test_bleu_empty_corpus():
    with pytest.raises(EmptyCorpusError):
        bleu([], [])


def test_position_metrics_exact():
    m = position_metrics({0, 2}, {0, 2})
    assert m == {"exact_match": 1.0, "precision": 1.0, "recall": 1.0, "f1": 1.0}


def test_position_metrics_golden_mismatch():
    m = position_metrics({0, 3}, {0, 2})
    assert m["exact_match"] == 0.0
    assert m["precision"] == 0.5
    assert m["recall"] == 0.5
    assert m["f1"] == 0.5


def test_position_metrics_empty_convention():
    m = position_metrics(set(), set())
    assert m == {"exact_match": 1.0, "precision": 1.0, "recall": 1.0, "f1": 1.0}


def test_position_metrics_f1_harmonic():
    m = position_metrics({0, 1, 2}, {1, 2, 3, 4})
    p, r = m["precision"], m["recall"]
    assert m["f1"] == pytest.approx(2 * p * r / (p + r))


def test_mean_length():
    assert mean_length(["a b", "a b c d"]) == 3.0


def test_mean_length_char_split_oracle():
    rng = np.random.default_rng(41)
    texts = [" ".join("x" for _ in range(int(rng.integers(1, 20)))) for _ in range(50)]
    oracle = sum(t.count(" ") + 1 for t in texts) / len(texts)
    assert mean_length(texts) == pytest.approx(oracle)


def test_mean_length_empty():
    with pytest.raises(EmptyCorpusError):
        mean_length([])


def test_external_scorer_constant():
    adapter = MockScorer(name="union", values=1.0, aggregate="threshold_ratio")
    result = score_with_external(adapter, ["a", "b"])
    assert result["aggregate"] == 1.0


def test_external_scorer_threshold_ratio():
    adapter = MockScorer(name="union", values=[0.6, 0.4], aggregate="threshold_ratio")
    result = score_with_external(adapter, ["a", "b"])
    assert result["aggregate"] == 0.5


def test_external_scorer_mean():
    adapter = MockScorer(name="bertscore", values=[0.8, 0.6], aggregate="mean")
    assert score_with_external(adapter, ["a", "b"])["aggregate"] == pytest.approx(0.7)


def _oracle_config(approach, split):
    maps = mapping_oracles_for_examples(split)
    if approach == "end_to_end":
        return PipelineConfig(approach, sc_backend=make_oracle_backend(maps["end_to_end"]))
    sc_key = "sc" if approach == "two_module" else "sc_v2"
    return PipelineConfig(
        approach,
        vnmpp_backend=make_oracle_backend(maps["vnmpp"]),
        sc_backend=make_oracle_backend(maps[sc_key]),
    )


@pytest.mark.parametrize("approach", ["two_module", "two_module_v2", "end_to_end"])
def test_evaluate_run_oracle_upper_bound(approach):
    corpus = make_corpus(30, seed=9, split="dev")
    split = make_static_split(corpus, ROC_POLICY, seed=3)
    report = evaluate_run(split, _oracle_config(approach, split))
    assert all(v == 100.0 for v in report.bleu.values())
    assert all(v == 1.0 for v in report.position.values())
    assert report.errors == 0
    assert report.counts == len(split)


def test_evaluate_run_deterministic_and_schema():
    corpus = make_corpus(10, seed=19, split="dev")
    split = make_static_split(corpus, ROC_POLICY, seed=4)
    config = _oracle_config("two_module_v2", split)
    a = evaluate_run(split, config, adapters=[MockScorer(name="union", aggregate="threshold_ratio")])
    b = evaluate_run(split, config, adapters=[MockScorer(name="union", aggregate="threshold_ratio")])
    assert a.to_json() == b.to_json()
    data = a.to_dict()
    assert set(data) == {
        "approach", "counts", "bleu", "mean_length", "position",
        "learned", "errors", "bleu_variant", "length_unit",
    }
    assert data["learned"]["union"] == 1.0
    assert data["counts"] == 10
