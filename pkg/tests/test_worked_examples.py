"""Byte-exact reproduction of the worked surface and abstract examples."""

import pytest

from morph.matcher import MatchSite, match_pattern
from morph.transforms import apply_compound, one_side_diff, transform_site
from utils.constants import CheckKind, Side, Variant

EXPECTED = {
    "compound_1": {
        Variant.SURFACE: ("Die Sonaräume seien vorhanden .", "The bico premises are available ."),
        Variant.ABSTRACT: ("Die Räume @COMPOUND_1@ seien vorhanden .", "The wuze premises are available ."),
    },
    "circumfix_1": {
        Variant.SURFACE: ("Das sind gute Nachrichten wofi die Stadt .", "That is good news the jebcityfet ."),
        Variant.ABSTRACT: ("Das sind gute Nachrichten fuge die Stadt .", "That is good news the city @CIRCUMFIX_1@ ."),
    },
    "infix_4": {
        Variant.SURFACE: ("Er schimpfte der Kryadeyitik , sicher .", "He chafed numime the criticism , sure ."),
        Variant.ABSTRACT: ("Er schimpfte der Kritik @INFIX_4@ , sicher .", "He chafed jigaq the criticism , sure ."),
    },
    "vowel_harmony_2": {
        Variant.SURFACE: ("Das waren gleich zoged Fehler !", "Those were errors bepor !"),
        Variant.ABSTRACT: ("Das waren gleich gapu Fehler !", "Those were errors @VOWEL_HARMONY_2@ !"),
    },
    "redup_full": {
        Variant.SURFACE: ("Das ist gija gefährlich .", "This is dangerousdangerous ."),
        Variant.ABSTRACT: ("Das ist jufo gefährlich .", "This is dangerous @FULL_REDUPLICATION@ ."),
    },
}


def _site(pid, pair, pattern):
    if pattern.is_compound:
        return MatchSite(pair.pair_id, pid, src_base_idx=1, trg_base_idx=1)
    return match_pattern(pair, pattern)


@pytest.mark.parametrize("pid", sorted(EXPECTED))
@pytest.mark.parametrize("variant", [Variant.SURFACE, Variant.ABSTRACT])
def test_worked_example_strings(pid, variant, worked, patterns_by_id, worked_inventory):
    pattern = patterns_by_id[pid]
    pair = worked[pid]
    record = transform_site(_site(pid, pair, pattern), pair, pattern, worked_inventory, variant)
    assert (record.src_text, record.trg_text) == EXPECTED[pid][variant]
    assert record.src_text.encode("utf-8") == EXPECTED[pid][variant][0].encode("utf-8")


def test_apply_compound_matches_dispatcher(worked, patterns_by_id, worked_inventory):
    pattern = patterns_by_id["compound_1"]
    pair = worked["compound_1"]
    record = apply_compound(_site("compound_1", pair, pattern), pair, pattern, worked_inventory)
    assert record.src_text == "Die Sonaräume seien vorhanden ."
    assert record.expected.check_kind is CheckKind.ISOLATED_TOKEN
    assert record.expected.morpheme_parts == ("bico",)


def test_apply_compound_rejects_trigger_patterns(worked, patterns_by_id, worked_inventory):
    pattern = patterns_by_id["circumfix_1"]
    pair = worked["circumfix_1"]
    with pytest.raises(ValueError):
        apply_compound(match_pattern(pair, pattern), pair, pattern, worked_inventory)


def test_expected_outcomes(worked, patterns_by_id, worked_inventory):
    def expected(pid, variant):
        pattern = patterns_by_id[pid]
        pair = worked[pid]
        return transform_site(_site(pid, pair, pattern), pair, pattern, worked_inventory, variant).expected

    assert expected("circumfix_1", Variant.SURFACE).morpheme_parts == ("jeb", "fet")
    assert expected("infix_4", Variant.SURFACE).morpheme_parts == ("numime",)
    assert expected("vowel_harmony_2", Variant.SURFACE).triple == ("b", "p", "r")
    assert expected("redup_full", Variant.SURFACE).check_kind is CheckKind.FULL_REDUP_TOKEN
    assert expected("circumfix_1", Variant.ABSTRACT).morpheme_parts == ("@CIRCUMFIX_1@",)
    assert expected("infix_4", Variant.ABSTRACT).morpheme_parts == ("jigaq",)
    assert all(expected(pid, v).check_side is Side.TARGET for pid in EXPECTED for v in Variant)


@pytest.mark.parametrize("pid", sorted(EXPECTED))
def test_one_side_rule(pid, worked, patterns_by_id, worked_inventory):
    pattern = patterns_by_id[pid]
    pair = worked[pid]
    for variant in Variant:
        record = transform_site(_site(pid, pair, pattern), pair, pattern, worked_inventory, variant)
        diffs = one_side_diff(record, pair)
        other = diffs[pattern.surface_side.other]
        if pattern.is_compound:
            assert other.kind == "insertion"
        else:
            assert other.kind == "substitution"
        assert len(other.added) == 1
        assert diffs[pattern.surface_side].kind != "unchanged"
