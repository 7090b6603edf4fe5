import pytest
from hypothesis import given
from hypothesis import strategies as st

from taxonomy_workbench.errors import InvalidLabelError
from taxonomy_workbench.labels import (
    clean_label,
    label_tokens,
    labels_similar,
    normalize_label,
    tokens_match,
)


def test_clean_label_trims():
    assert clean_label("  Star  ") == "Star"


@pytest.mark.parametrize("bad", ["", "   ", "A / B"])
def test_clean_label_rejects(bad):
    with pytest.raises(InvalidLabelError):
        clean_label(bad)


def test_clean_label_rejects_non_string():
    with pytest.raises(InvalidLabelError):
        clean_label(7)


def test_normalize_label():
    assert normalize_label("Family_Business") == "family business"
    assert normalize_label("  North   America ") == "north america"


def test_label_tokens():
    assert label_tokens("Family_Business-Unit x") == ("family", "business", "unit", "x")


@pytest.mark.parametrize(
    "a,b,expected",
    [
        ("africa", "african", True),
        ("asia", "asian", True),
        ("in", "india", False),  # stems below four characters never prefix-match
        ("star", "star", True),
        ("sun", "sunday", False),
        ("antarctic", "antarctica", True),
    ],
)
def test_tokens_match(a, b, expected):
    assert tokens_match(a, b) is expected


def test_labels_similar_across_words():
    assert labels_similar("Africa", "African Countries")
    assert labels_similar("North America", "North American Countries")
    assert not labels_similar("Oceania", "Visual Arts")


def test_labels_similar_on_normalized_equality():
    assert labels_similar("Family_Business", "family  business")


@given(st.text(min_size=1).filter(lambda s: s.strip()))
def test_normalize_is_idempotent(text):
    once = normalize_label(text)
    assert normalize_label(once) == once


@given(st.text(alphabet="abcdefg _-", min_size=1))
def test_tokens_are_already_folded(text):
    for token in label_tokens(text):
        assert token == token.casefold()
        assert token  # never empty
