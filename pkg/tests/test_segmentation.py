from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from genlattice.segmentation import (
    SegmentationMode,
    Token,
    TokenSequence,
    reconstruct,
    segment,
)

from .conftest import random_unicode_text

MODES = [SegmentationMode.SPACE, SegmentationMode.SENTENCE, SegmentationMode.PHRASE]


def surfaces(seq):
    return [t.surface for t in seq.tokens]


def separators(seq):
    return [t.trailing_separator for t in seq.tokens]


def test_space_mode_splits_words():
    seq = segment("the cat sat", "space")
    assert surfaces(seq) == ["the", "cat", "sat"]
    assert separators(seq) == [" ", " ", ""]


def test_sentence_mode_splits_after_terminators():
    seq = segment("Run! Hide? Now.", "sentence")
    assert surfaces(seq) == ["Run!", "Hide?", "Now."]


def test_phrase_mode_attaches_commas():
    seq = segment("a, b, and c", "phrase")
    assert surfaces(seq) == ["a,", "b,", "and c"]
    assert separators(seq) == [" ", " ", ""]


def test_indices_consecutive_from_zero():
    seq = segment("one two three four", "space")
    assert [t.index for t in seq.tokens] == [0, 1, 2, 3]


def test_double_space_round_trips():
    assert reconstruct(segment("x  y", "space")) == "x  y"


def test_empty_text_yields_empty_sequence():
    seq = segment("", "space")
    assert seq.tokens == ()
    assert reconstruct(seq) == ""


def test_whitespace_only_round_trips():
    assert reconstruct(segment("  \t ", "space")) == "  \t "


def test_leading_whitespace_round_trips():
    text = "  leading space"
    assert reconstruct(segment(text, "space")) == text


def test_sentence_without_trailing_whitespace_keeps_tail():
    seq = segment("Done.", "sentence")
    assert surfaces(seq) == ["Done."]


def test_phrase_comma_without_space():
    seq = segment("a,b", "phrase")
    assert surfaces(seq) == ["a,", "b"]
    assert reconstruct(seq) == "a,b"


@pytest.mark.parametrize("mode", MODES)
@given(text=st.text(max_size=200))
def test_round_trip_hypothesis(mode, text):
    assert reconstruct(segment(text, mode)) == text


@pytest.mark.parametrize("mode", MODES)
def test_round_trip_randomized_corpus(mode):
    rng = random.Random(7)
    for _ in range(300):
        text = random_unicode_text(rng)
        assert reconstruct(segment(text, mode)) == text


@pytest.mark.parametrize("mode", MODES)
def test_no_empty_surfaces(mode):
    rng = random.Random(11)
    for _ in range(200):
        text = random_unicode_text(rng)
        for tok in segment(text, mode).tokens:
            assert tok.surface != ""


def test_determinism():
    text = "One, two. Three! Four?  Five"
    for mode in MODES:
        a = segment(text, mode)
        b = segment(text, mode)
        assert a == b


def test_granularity_monotone_on_natural_text():
    # holds when delimiters precede whitespace and every sentence has a comma
    texts = [
        "The ship sailed, and the crew sang. The storm came, but they held on.",
        "First, check the map. Then, follow the river. Finally, rest at the inn.",
        "One, two. Three, four. Five, six and seven.",
    ]
    for text in texts:
        n_space = len(segment(text, "space").tokens)
        n_phrase = len(segment(text, "phrase").tokens)
        n_sentence = len(segment(text, "sentence").tokens)
        assert n_space >= n_phrase >= n_sentence


def test_sequence_reports_length():
    assert len(segment("a b", "space")) == 2
    assert segment("a b", "space").surfaces() == ["a", "b"]


def test_reconstruct_handmade_sequence():
    seq = TokenSequence("g", (Token(0, "hi", "  "), Token(1, "there", "")))
    assert reconstruct(seq) == "hi  there"
