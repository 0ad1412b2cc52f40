import random
from dataclasses import replace

import pytest

from morph.corpus_io import Token
from morph.matcher import (
    PatternPair,
    compound_candidates,
    load_patterns,
    match_compound_site,
    match_pattern,
    scan_corpus,
    validate_site,
)
from utils.constants import BaseSelector, Phenomenon, Side
from utils.exceptions import ConfigurationError

from toy_corpus import compound_rows, distractor_rows, make_pair, modifier_rows, prep_rows, NOUNS, ADJECTIVES, toy_pairs


def test_default_pattern_table(patterns):
    assert len(patterns) == 20
    ids = [p.id for p in patterns]
    assert ids[:5] == ["compound_1", "compound_3", "compound_5", "compound_7", "compound_9"]
    caps = {p.id: p.max_train_insertions for p in patterns if p.is_compound}
    assert caps == {"compound_1": 1095, "compound_3": 522, "compound_5": 238, "compound_7": 67, "compound_9": 27}
    triple = next(p for p in patterns if p.id == "redup_triple")
    assert triple.trigger_repeat == 2 and triple.surface_side is Side.SOURCE


def test_pattern_file_errors(tmp_path):
    header = "id\tphenomenon\tsurface_side\tsrc_lemmas\ttrg_lemmas\tbase_selector\n"
    path = tmp_path / "p.tsv"
    path.write_text(header + "x\tcompound\ttarget\t-\t-\trandom_aligned_noun\n", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_patterns(path)
    path.write_text(header + "x\tredup_partial\ttarget\tsehr\tvery\tadjective_after_modifier\n", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_patterns(path)
    path.write_text("id\tphenomenon\n", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_patterns(path)


def test_circumfix_site(worked, patterns_by_id):
    site = match_pattern(worked["circumfix_1"], patterns_by_id["circumfix_1"])
    assert (site.src_trigger_idx, site.trg_trigger_idx) == (4, 4)
    assert (site.src_base_idx, site.trg_base_idx) == (6, 6)
    assert validate_site(site, worked["circumfix_1"], patterns_by_id["circumfix_1"]) == []


def test_other_preposition_does_not_match(worked, patterns_by_id):
    assert match_pattern(worked["circumfix_1"], patterns_by_id["circumfix_2"]) is None


def test_cardinal_site(worked, patterns_by_id):
    site = match_pattern(worked["vowel_harmony_2"], patterns_by_id["vowel_harmony_2"])
    assert (site.src_trigger_idx, site.src_base_idx) == (3, 4)
    assert (site.trg_trigger_idx, site.trg_base_idx) == (2, 3)


def test_modifier_site(worked, patterns_by_id):
    site = match_pattern(worked["redup_full"], patterns_by_id["redup_full"])
    assert (site.src_trigger_idx, site.src_base_idx) == (2, 3)


def test_triplication_needs_two_modifiers(patterns_by_id):
    src, trg = modifier_rows("sehr", ADJECTIVES[1], "very", repeat=2)
    pair = make_pair(0, src, trg)
    assert match_pattern(pair, patterns_by_id["redup_partial"]) is None
    site = match_pattern(pair, patterns_by_id["redup_triple"])
    assert site.src_trigger_idx == 4
    assert site.src_extra == (2, 3)

    src, trg = modifier_rows("sehr", ADJECTIVES[1], "very", repeat=1)
    single = make_pair(1, src, trg)
    assert match_pattern(single, patterns_by_id["redup_triple"]) is None
    assert match_pattern(single, patterns_by_id["redup_partial"]) is not None


def test_unaligned_base_is_rejected(worked, patterns_by_id):
    pair = worked["circumfix_1"]
    links = {(s, t) for s, t in pair.alignment if s != 6} | {(6, 5)}
    broken = pair.with_sentences(pair.src, pair.trg, links)
    assert match_pattern(broken, patterns_by_id["circumfix_1"]) is None


def test_missing_labels_fall_back_to_adjacency(worked, patterns_by_id):
    pair = worked["circumfix_1"]

    def strip(sentence):
        return type(sentence)(tuple(replace(t, deprel="_") for t in sentence.tokens))

    unlabelled = pair.with_sentences(strip(pair.src), strip(pair.trg), pair.alignment)
    site = match_pattern(unlabelled, patterns_by_id["circumfix_1"])
    assert (site.src_base_idx, site.trg_base_idx) == (6, 6)


def test_tiger_style_labels(patterns_by_id):
    src, trg = prep_rows("für", NOUNS[0], "for")
    # TIGER: the preposition heads its noun, which attaches as nk
    src[4] = ("für", "für", "ADP", 4, "mo")
    src[5] = ("die", "der", "DET", 7, "nk")
    src[6] = (NOUNS[0][0], NOUNS[0][1], "NOUN", 5, "nk")
    pair = make_pair(0, src, trg)
    site = match_pattern(pair, patterns_by_id["circumfix_1"])
    assert site is not None and site.src_base_idx == 6


def test_compound_candidates_need_one_to_one_nouns():
    src, trg = compound_rows(NOUNS[3])
    pair = make_pair(0, src, trg)
    assert compound_candidates(pair) == [(1, 1)]
    site = match_compound_site(pair, random.Random(0), "compound_1")
    assert (site.src_base_idx, site.trg_base_idx, site.pattern_id) == (1, 1, "compound_1")

    many_to_one = pair.with_sentences(pair.src, pair.trg, set(pair.alignment) | {(0, 1)})
    assert compound_candidates(many_to_one) == []


def test_scan_claims_each_pair_once(patterns):
    pairs = toy_pairs(patterns, per_pattern=4, distractors=6)
    result = scan_corpus(pairs, patterns, seed=1)
    pair_ids = [s.pair_id for s in result.sites]
    assert len(pair_ids) == len(set(pair_ids))
    trigger_ids = [p.id for p in patterns if not p.is_compound]
    for pid in trigger_ids:
        assert result.counts[pid] == 4
    assert sum(result.counts[p.id] for p in patterns if p.is_compound) == 4 * 5


def test_compound_patterns_share_unclaimed_pairs(patterns):
    compounds = [p for p in patterns if p.is_compound]
    pairs = [make_pair(i, *compound_rows(NOUNS[i % len(NOUNS)])) for i in range(23)]
    result = scan_corpus(pairs, compounds, seed=9)
    counts = [result.counts[p.id] for p in compounds]
    assert sum(counts) == 23
    assert max(counts) - min(counts) <= 1


def test_scan_is_deterministic_and_thread_independent(worker_pool, patterns):
    pairs = toy_pairs(patterns, per_pattern=3, distractors=3)
    first = scan_corpus(pairs, patterns, seed=4, threads=1)
    second = scan_corpus(pairs, patterns, seed=4, threads=4)
    assert worker_pool == [4]
    assert first.sites == second.sites
    assert first.counts == second.counts


def test_distractors_produce_no_sites(patterns):
    pairs = [make_pair(i, *distractor_rows()) for i in range(5)]
    assert scan_corpus(pairs, patterns).sites == []


def test_pattern_validation_in_code():
    with pytest.raises(ConfigurationError):
        PatternPair("c", Phenomenon.CIRCUMFIX, Side.TARGET, base_selector=BaseSelector.PREP_OBJECT)
    pattern = PatternPair(
        "c", Phenomenon.CIRCUMFIX, Side.TARGET, frozenset({"für"}), frozenset({"for"}), BaseSelector.PREP_OBJECT
    )
    assert pattern.trigger_upos == frozenset({"ADP"})
    assert pattern.base_upos == "NOUN"
