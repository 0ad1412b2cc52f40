import pytest

from utils.text_helpers import last_two_vowels, levenshtein, matches_skeleton, normalized_levenshtein


@pytest.mark.parametrize("a,b,distance", [
    ("kitten", "sitting", 3),
    ("yadey", "yadei", 1),
    ("numime", "numime", 0),
    ("", "fet", 3),
])
def test_levenshtein(a, b, distance):
    assert levenshtein(a, b) == distance
    assert levenshtein(b, a) == distance


def test_normalized_levenshtein():
    assert normalized_levenshtein("", "") == 0.0
    assert normalized_levenshtein("abc", "") == 1.0
    assert normalized_levenshtein("yadey", "yadei") == pytest.approx(0.2)
    assert normalized_levenshtein("numima", "numime") < 0.34


def test_vowels_and_skeleton():
    assert last_two_vowels("city") == ("i", "i")
    assert last_two_vowels("errors") == ("e", "o")
    assert last_two_vowels("psst") is None
    assert matches_skeleton("bapor", ("b", "p", "r"))
    assert not matches_skeleton("bpr", ("b", "p", "r"))
