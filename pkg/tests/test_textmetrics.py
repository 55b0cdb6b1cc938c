import math

import numpy as np
import pytest

from polyeval.dataio import EmbeddingStore, text_key
from polyeval.errors import EmptyText, MissingEmbedding, ValidationError, ZeroNormVector
from polyeval.textmetrics import bleu, embed_cosine, exact_match, make_metric, score_matrix


def store_of(**vectors):
    return EmbeddingStore(
        {text_key(k): np.asarray(v, dtype=float) for k, v in vectors.items()}
    )


# --- bleu --------------------------------------------------------------------


def test_bleu_identity_is_one():
    for text in ["the cat sat", "a", "one two three four five", "Mixed CASE x"]:
        assert bleu(text, text) == pytest.approx(1.0, abs=1e-12)


def test_bleu_disjoint_is_tiny():
    # unigram precision is 0 and is never smoothed, so the score collapses
    value = bleu("x y z", "a b c")
    assert value == 0.0
    assert value < 0.02


def test_bleu_clipping_hand_case():
    # candidate "the the the" vs reference "the cat":
    #   p1 = min(3, 1)/3 = 1/3 (clipped)
    #   p2 = smoothed (0+1)/(2+1) = 1/3, p3 = (0+1)/(1+1) = 1/2, p4 = (0+1)/(0+1) = 1
    #   brevity penalty = 1 (candidate longer than reference)
    expected = (1 / 3 * 1 / 3 * 1 / 2 * 1.0) ** 0.25
    assert bleu("the the the", "the cat") == pytest.approx(expected, abs=1e-12)


def test_bleu_brevity_penalty():
    # one matching unigram, candidate shorter than reference
    # p1 = 1, p2..p4 smoothed to 1 (no bigrams possible), BP = exp(1 - 3/1)
    assert bleu("cat", "cat cat cat") == pytest.approx(math.exp(-2.0), abs=1e-12)


def test_bleu_whitespace_invariance():
    base = bleu("the cat sat", "the cat sat on the mat")
    assert bleu("  the   cat  sat  ", "the cat sat on the mat") == base
    assert bleu("the\tcat\nsat", "the cat sat on the mat") == base


def test_bleu_case_insensitive():
    assert bleu("The Cat", "the cat") == pytest.approx(1.0, abs=1e-12)


def test_bleu_range_property():
    rng = np.random.default_rng(5)
    words = ["a", "b", "c", "d", "e", "f"]
    for _ in range(300):
        cand = " ".join(rng.choice(words, size=rng.integers(1, 8)))
        ref = " ".join(rng.choice(words, size=rng.integers(1, 8)))
        value = bleu(cand, ref)
        assert 0.0 <= value <= 1.0 + 1e-12


def test_bleu_empty_text_rejected():
    with pytest.raises(EmptyText):
        bleu("", "the cat")
    with pytest.raises(EmptyText):
        bleu("the cat", "   ")


# --- embedding cosine ----------------------------------------------------------


def test_cosine_fixtures():
    store = store_of(i="1 0".split(), j="0 1".split(), d=["1", "1"])
    assert embed_cosine("i", "i", store) == pytest.approx(1.0, abs=1e-12)
    assert embed_cosine("i", "j", store) == pytest.approx(0.0, abs=1e-12)
    assert embed_cosine("d", "i", store) == pytest.approx(0.7071, abs=1e-4)


def test_cosine_symmetric_and_scale_invariant():
    rng = np.random.default_rng(17)
    for _ in range(50):
        u = rng.normal(size=4)
        v = rng.normal(size=4)
        s = store_of(a=u, b=v, big_a=u * 37.5, big_b=v * 0.004)
        assert embed_cosine("a", "b", s) == pytest.approx(
            embed_cosine("b", "a", s), abs=1e-12
        )
        assert embed_cosine("big_a", "big_b", s) == pytest.approx(
            embed_cosine("a", "b", s), abs=1e-9
        )


def test_cosine_errors():
    store = store_of(a=[1.0, 0.0], z=[0.0, 0.0])
    with pytest.raises(MissingEmbedding):
        embed_cosine("a", "missing", store)
    with pytest.raises(ZeroNormVector):
        embed_cosine("a", "z", store)


# --- score matrices -------------------------------------------------------------


def test_score_matrix_shapes_and_identity_diagonal():
    outs = ["one two", "three four", "five"]
    m = score_matrix(outs, outs, bleu)
    assert m.shape == (3, 3)
    assert np.allclose(np.diag(m), 1.0)
    m1 = score_matrix(["a"], ["a"], exact_match)
    assert m1.shape == (1, 1) and m1[0, 0] == 1.0


def test_score_matrix_matches_direct_calls_elementwise():
    store = store_of(
        o1=[1.0, 0.0, 0.0],
        o2=[0.5, 0.5, 0.0],
        r1=[0.0, 1.0, 0.0],
        r2=[1.0, 1.0, 1.0],
        r3=[0.2, 0.1, 0.9],
    )
    metric = make_metric("embed_cosine", store)
    outs, refs = ["o1", "o2"], ["r1", "r2", "r3"]
    matrix = score_matrix(outs, refs, metric)
    for i, o in enumerate(outs):
        for j, r in enumerate(refs):
            assert matrix[i, j] == embed_cosine(o, r, store)


def test_score_matrix_annotates_failures():
    store = store_of(a=[1.0, 0.0])
    metric = make_metric("embed_cosine", store)
    with pytest.raises(MissingEmbedding, match=r"output 1, reference 0"):
        score_matrix(["a", "missing"], ["a"], metric)


def test_score_matrix_rejects_empty_lists():
    with pytest.raises(ValidationError):
        score_matrix([], ["r"], exact_match)
    with pytest.raises(ValidationError):
        score_matrix(["o"], [], exact_match)


def test_make_metric_ids():
    assert make_metric("bleu") is bleu
    with pytest.raises(ValidationError):
        make_metric("embed_cosine")  # needs a store
    with pytest.raises(ValidationError):
        make_metric("mystery")
