import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kisimple.errors import (BufferFull, DegenerateBuffer, EmptyCorpus, ModelFormatError,
                             Unreachable)
from kisimple.fluency import (UNK, Discriminator, NGramLM, TrainingBuffer, buffer_push,
                              calibrate_lambda, d_score, f1_score, lm_score, lm_score_from_values,
                              retrain_discriminator, train_ngram_lm)
from kisimple.textproc import tokenize


class FixedLM:
    """Returns a preset log-likelihood per raw text."""

    def __init__(self, values):
        self.values = values

    def avg_log_likelihood(self, doc):
        return self.values[doc.raw]


def test_unigram_mle_example():
    lm = train_ngram_lm([tokenize("a a b")], order=1, add_k=0)
    expected = (math.log(2 / 3) + math.log(1 / 3)) / 2
    assert lm.avg_log_likelihood(tokenize("a b")) == pytest.approx(expected, abs=1e-6)
    assert expected == pytest.approx(-0.7520, abs=1e-4)


def test_empty_corpus():
    with pytest.raises(EmptyCorpus):
        train_ngram_lm([])


def test_bad_hyperparameters():
    with pytest.raises(ValueError):
        train_ngram_lm([tokenize("a")], order=0)
    with pytest.raises(ValueError):
        train_ngram_lm([tokenize("a")], add_k=-1)


CORPUS = [tokenize("the cat sat. the dog sat. a cat ran."), tokenize("the dog ran fast.")]


@pytest.mark.parametrize("order", [1, 2, 3])
@pytest.mark.parametrize("add_k", [0.0, 0.1, 1.0])
def test_conditionals_sum_to_one(order, add_k):
    lm = train_ngram_lm(CORPUS, order=order, add_k=add_k)
    words = sorted(lm.vocab)
    contexts = [(), ("the",), ("<s>", "<s>"), ("<s>", "the"), ("the", "cat"), ("zzz", "cat"),
                ("ran",)]
    for ctx in contexts:
        total = math.fsum(lm.prob(w, ctx) for w in words)
        assert total == pytest.approx(1.0, abs=1e-12), ctx


def test_unknown_word_maps_to_unk():
    lm = train_ngram_lm(CORPUS, order=2)
    assert lm.prob("zebra", ("the",)) == lm.prob(UNK, ("the",))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from(["the", "cat", "dog", "sat", "ran", "a"]), min_size=1,
                max_size=12))
def test_known_token_loglik_nonpositive(words):
    lm = train_ngram_lm(CORPUS, order=3)
    assert lm.avg_log_likelihood(tokenize(" ".join(words))) <= 0.0


def test_lm_serialization_roundtrip(tmp_path):
    lm = train_ngram_lm(CORPUS, order=3, add_k=0.1)
    path = tmp_path / "m.kislm"
    lm.save(path)
    assert path.read_bytes().startswith(b"KISLM1")
    again = NGramLM.load(path)
    probe = tokenize("The cat ran fast. A dog sat.")
    assert again.avg_log_likelihood(probe) == lm.avg_log_likelihood(probe)
    assert again.to_bytes() == lm.to_bytes()
    with pytest.raises(ModelFormatError):
        NGramLM.from_bytes(b"nope")
    with pytest.raises(ModelFormatError):
        NGramLM.from_bytes(lm.to_bytes()[:-3])


@pytest.mark.parametrize("lp,lq,expected", [(-5.0, -5.0, 1.0), (-5.0, -6.3, 0.0),
                                            (-5.0, -5.65, 0.5), (-5.0, -4.0, 1.0)])
def test_lm_score_values(lp, lq, expected):
    assert lm_score_from_values(lp, lq, 1.3) == pytest.approx(expected, abs=1e-9)


def test_lm_score_on_documents():
    p, q = tokenize("p"), tokenize("q")
    assert lm_score(p, q, FixedLM({"p": -3.0, "q": -3.65})) == pytest.approx(0.5, abs=1e-9)


@given(st.floats(-20, 0), st.floats(-20, 0), st.floats(0.01, 10), st.floats(0.01, 10))
def test_lm_score_monotone_in_lambda(lp, lq, l1, l2):
    lo, hi = sorted((l1, l2))
    a, b = lm_score_from_values(lp, lq, lo), lm_score_from_values(lp, lq, hi)
    assert 0.0 <= a <= b <= 1.0


def _pairs(gaps):
    vals, pairs = {}, []
    for i, g in enumerate(gaps):
        vals[f"p{i}"], vals[f"q{i}"] = -4.0, -4.0 - g
        pairs.append((tokenize(f"p{i}"), tokenize(f"q{i}")))
    return pairs, FixedLM(vals)


def test_calibrate_closed_form():
    pairs, lm = _pairs([1.0])
    assert calibrate_lambda(pairs, lm, target_mean=0.5) == pytest.approx(2.0, abs=1e-3)


def test_calibrate_equal_likelihoods_returns_lower_bound():
    pairs, lm = _pairs([0.0, 0.0])
    assert calibrate_lambda(pairs, lm, target_mean=0.9, lo=1e-4) == 1e-4


def test_calibrate_unreachable():
    pairs, lm = _pairs([0.5, 2.0])
    with pytest.raises(Unreachable):
        calibrate_lambda(pairs, lm, target_mean=1.0)


def test_calibrate_result_meets_target():
    pairs, lm = _pairs([0.2, 0.9, 1.7, -0.3])
    lam = calibrate_lambda(pairs, lm, target_mean=0.9)
    vals = [(-4.0, -4.0 - g) for g in (0.2, 0.9, 1.7, -0.3)]
    mean = math.fsum(lm_score_from_values(a, b, lam) for a, b in vals) / 4
    assert mean >= 0.9
    below = math.fsum(lm_score_from_values(a, b, lam - 2e-4) for a, b in vals) / 4
    assert below < 0.9


def test_buffer_protocol():
    buf = TrainingBuffer()
    assert buffer_push(buf, "first", 1) is False
    for i in range(1998):
        assert buffer_push(buf, f"t{i}", i % 2) is False
    assert buffer_push(buf, "last", 0) is True
    with pytest.raises(BufferFull):
        buffer_push(buf, "over", 1)
    with pytest.raises(ValueError):
        TrainingBuffer().push("x", 2)


def test_f1_edge_cases():
    assert f1_score([1, 0, 1], [0, 0, 0]) == 0.0
    assert f1_score([1, 0, 1], [1, 0, 1]) == 1.0
    assert f1_score([1, 1, 0, 0], [1, 0, 1, 0]) == pytest.approx(0.5)


def separable_buffer(seed=0):
    rng = random.Random(seed)
    vocab = ["river", "market", "council", "school", "road", "price", "team", "storm", "city",
             "farm", "bridge", "plan", "vote", "rain", "game", "report"]
    buf = TrainingBuffer()
    for i in range(2000):
        words = [rng.choice(vocab) for _ in range(rng.randint(4, 9))]
        label = i % 2
        if label:
            words.insert(rng.randrange(len(words) + 1), "xx")
        buf.push(" ".join(words).capitalize() + ".", label)
    return buf


def test_zero_discriminator_is_half():
    d = Discriminator()
    assert d_score("anything at all", d) == 0.5
    assert d_score(tokenize("Some text."), d) == 0.5


def test_single_label_buffer_is_degenerate():
    buf = TrainingBuffer(capacity=10)
    for i in range(10):
        buf.push(f"text {i}", 1)
    with pytest.raises(DegenerateBuffer):
        retrain_discriminator(buf, seed=0)


def test_retrain_requires_full_buffer():
    buf = TrainingBuffer(capacity=10)
    buf.push("a", 0)
    with pytest.raises(ValueError):
        retrain_discriminator(buf, seed=0)


def test_separable_retrain():
    buf = separable_buffer()
    disc = retrain_discriminator(buf, seed=7)
    assert len(buf) == 0
    assert len(disc.checkpoint_f1) == 5
    assert disc.checkpoint_f1[disc.selected_epoch - 1] == max(disc.checkpoint_f1) == 1.0
    assert d_score("The river xx market plan.", disc) > 0.5
    assert d_score("The river market plan.", disc) < 0.5
    again = retrain_discriminator(separable_buffer(), seed=7)
    assert np.array_equal(disc.weights, again.weights) and disc.bias == again.bias


def test_discriminator_serialization(tmp_path):
    disc = retrain_discriminator(separable_buffer(), seed=1)
    path = tmp_path / "d.kisd"
    disc.save(path)
    back = Discriminator.load(path)
    assert np.array_equal(back.weights, disc.weights) and back.bias == disc.bias
    assert d_score("Road xx vote.", back) == d_score("Road xx vote.", disc)
    with pytest.raises(ModelFormatError):
        Discriminator.from_bytes(b"KISD1\x00")


@given(st.floats(-1e6, 1e6))
def test_d_score_strictly_inside_unit_interval(bias):
    d = Discriminator(weights=np.zeros(16), bias=bias, feature_dim=16)
    assert 0.0 < d.prob_authentic("x") < 1.0
