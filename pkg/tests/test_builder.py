from dataclasses import replace

import pytest

from morph.builder import (
    BuildConfig,
    Manifest,
    RecountResult,
    TestMetaRow,
    bucket_of,
    build_dataset,
    is_held_out,
    read_manifest,
    read_test_meta,
    recount_lines,
    recount_train,
    validate_build,
    write_dataset,
)
from morph.corpus_io import render
from morph.morphemes import MorphemeInventory
from utils.constants import MANIFEST_FILE, TRAIN_SRC, TRAIN_TRG, TRG_VOCAB_FILE, CheckKind, Slot, Variant
from utils.exceptions import ConfigurationError, InventoryMismatchError

from toy_corpus import distractor_rows, make_pair, worked_pairs

WORKED_ORDER = ("compound_1", "circumfix_1", "infix_4", "vowel_harmony_2", "redup_full")


@pytest.fixture
def small_corpus():
    pairs = list(worked_pairs().values())
    for i in range(5):
        pairs.append(make_pair(len(pairs), *distractor_rows()))
    return pairs


@pytest.mark.parametrize(
    "freq,label",
    [
        (0, "zero-shot"), (1, "1-5"), (5, "1-5"), (6, "6-15"), (15, "6-15"), (16, "16-50"),
        (50, "16-50"), (51, "51-100"), (100, "51-100"), (101, "101-500"), (500, "101-500"),
        (501, "501-1000"), (1000, "501-1000"), (1001, ">1000"),
    ],
)
def test_bucket_boundaries(freq, label):
    assert bucket_of(freq) == label


def test_negative_frequency_is_rejected():
    with pytest.raises(ValueError):
        bucket_of(-1)


def test_training_corpus_layout(small_corpus, worked_patterns, worked_inventory):
    result = build_dataset(small_corpus, worked_patterns, worked_inventory, BuildConfig(seed=1))
    assert result.originals == 10
    assert len(result.train_src) == len(result.train_trg) == 10 + 5 + 5
    assert result.train_src[:10] == [render(p.src) for p in small_corpus]
    assert result.train_trg[:10] == [render(p.trg) for p in small_corpus]
    assert result.train_src[10:15] == [
        "Die Sonaräume seien vorhanden .",
        "Das sind gute Nachrichten wofi die Stadt .",
        "Er schimpfte der Kryadeyitik , sicher .",
        "Das waren gleich zoged Fehler !",
        "Das ist gija gefährlich .",
    ]
    assert result.train_trg[15:] == [
        "The wuze premises are available .",
        "That is good news the city @CIRCUMFIX_1@ .",
        "He chafed jigaq the criticism , sure .",
        "Those were errors @VOWEL_HARMONY_2@ !",
        "This is dangerous @FULL_REDUPLICATION@ .",
    ]
    for pid in WORKED_ORDER:
        assert result.manifest.train_count(pid, Variant.SURFACE) == 1
        assert result.manifest.train_count(pid, Variant.ABSTRACT) == 1
        assert result.manifest.test_count(pid) == 0
    assert result.manifest.base_freqs[("circumfix_1", "stadt")] == 1


def test_manifest_matches_recount(small_corpus, worked_patterns, worked_inventory):
    result = build_dataset(small_corpus, worked_patterns, worked_inventory, BuildConfig(seed=1))
    recount = recount_lines(result.train_src, result.train_trg, worked_inventory, worked_patterns)
    assert recount.conflicts == []
    assert validate_build(result.manifest, recount) == []


def test_cap_zero_removes_pattern(small_corpus, worked_patterns, worked_inventory):
    config = BuildConfig(seed=1, caps={"circumfix_1": 0})
    result = build_dataset(small_corpus, worked_patterns, worked_inventory, config)
    assert result.manifest.train_count("circumfix_1") == 0
    assert len(result.train_src) == 10 + 4 + 4


def test_unknown_cap_is_a_configuration_error(small_corpus, worked_patterns, worked_inventory):
    with pytest.raises(ConfigurationError):
        build_dataset(small_corpus, worked_patterns, worked_inventory, BuildConfig(seed=1, caps={"nope": 1}))


def test_no_abstract_variant(small_corpus, worked_patterns, worked_inventory):
    config = BuildConfig(seed=1, enable_abstract=False)
    result = build_dataset(small_corpus, worked_patterns, worked_inventory, config)
    assert len(result.train_src) == 15
    assert all(result.manifest.train_count(pid, Variant.ABSTRACT) == 0 for pid in WORKED_ORDER)


def test_inventory_must_cover_patterns(small_corpus, patterns, worked_inventory):
    with pytest.raises(InventoryMismatchError):
        build_dataset(small_corpus, patterns, worked_inventory, BuildConfig(seed=1))


def test_overlapping_inventory_is_rejected(small_corpus, worked_patterns, worked_inventory):
    assignments = {key: dict(slots) for key, slots in worked_inventory.assignments.items()}
    gija = assignments[("redup_full", Variant.SURFACE)][Slot.ISOLATED]
    assignments[("redup_full", Variant.SURFACE)][Slot.ISOLATED] = replace(gija, surface="numim")
    with pytest.raises(InventoryMismatchError, match="overlap"):
        build_dataset(small_corpus, worked_patterns, MorphemeInventory(assignments), BuildConfig(seed=1))


def test_separate_test_corpus(small_corpus, worked_patterns, worked_inventory):
    test_pairs = list(worked_pairs().values())
    result = build_dataset(small_corpus, worked_patterns, worked_inventory, BuildConfig(seed=1), test_pairs)
    surface = result.test[Variant.SURFACE]
    assert [item.meta.pattern_id for item in surface] == list(WORKED_ORDER)
    assert [item.meta.line_no for item in surface] == [1, 2, 3, 4, 5]
    circumfix = surface[1].meta
    assert circumfix.check_kind is CheckKind.CIRCUMFIXED_TOKEN
    assert circumfix.base_train_freq == 1
    assert surface[1].trg_text == "That is good news the jebcityfet ."
    assert result.manifest.test_count("circumfix_1") == 1


def test_skipped_sites_are_tallied(worked_patterns, worked_inventory):
    pairs = worked_pairs()
    vh = pairs["vowel_harmony_2"]
    # a vowel-less base cannot carry the harmony token
    trg = vh.trg.replace_token(3, "psst")
    pairs["vowel_harmony_2"] = vh.with_sentences(vh.src, trg, vh.alignment)
    result = build_dataset(list(pairs.values()), worked_patterns, worked_inventory, BuildConfig(seed=1))
    assert result.manifest.skipped_count("vowel_harmony_2") == 1
    assert result.manifest.train_count("vowel_harmony_2") == 0


def test_held_out_split_is_stable():
    picked = [pid for pid in range(2000) if is_held_out(pid, 5, 0.1)]
    assert picked == [pid for pid in range(2000) if is_held_out(pid, 5, 0.1)]
    assert 120 < len(picked) < 280
    assert not any(is_held_out(pid, 5, 0.0) for pid in range(100))


def test_build_is_deterministic(worker_pool, toy_train, toy_test, patterns, toy_inventory):
    first = build_dataset(toy_train, patterns, toy_inventory, BuildConfig(seed=3), toy_test)
    assert worker_pool == []
    second = build_dataset(toy_train, patterns, toy_inventory, BuildConfig(seed=3, threads=4), toy_test)
    # train and test scans plus train and test rewrites
    assert worker_pool == [4, 4, 4, 4]
    assert first.train_src == second.train_src
    assert first.train_trg == second.train_trg
    assert first.manifest.to_tsv() == second.manifest.to_tsv()
    for variant in first.test:
        assert [i.meta.as_row() for i in first.test[variant]] == [i.meta.as_row() for i in second.test[variant]]


def test_write_and_read_back(tmp_path, toy_train, toy_test, patterns, toy_inventory):
    result = build_dataset(toy_train, patterns, toy_inventory, BuildConfig(seed=3), toy_test)
    write_dataset(result, tmp_path)

    for name in (TRAIN_SRC, TRAIN_TRG, MANIFEST_FILE, TRG_VOCAB_FILE):
        assert (tmp_path / name).exists()
    lines = (tmp_path / TRAIN_SRC).read_text(encoding="utf-8").splitlines()
    assert lines[:result.originals] == [render(p.src) for p in toy_train]

    manifest = read_manifest(tmp_path / MANIFEST_FILE)
    assert manifest.counts == result.manifest.counts
    assert manifest.base_freqs == result.manifest.base_freqs
    assert manifest.seed == 3 and manifest.digest == result.manifest.digest

    meta = read_test_meta(tmp_path / "test.surface.meta.tsv")
    assert meta == [item.meta for item in result.test[Variant.SURFACE]]

    recount = recount_train(tmp_path / TRAIN_SRC, tmp_path / TRAIN_TRG, toy_inventory, patterns)
    assert validate_build(manifest, recount) == []


def test_validate_build_reports_drift():
    manifest = Manifest(counts={("p", Variant.SURFACE): {"train_count": 2, "test_count": 0, "skipped_count": 0}})
    manifest.base_freqs = {("p", "x"): 2}
    problems = validate_build(manifest, RecountResult({("p", Variant.SURFACE): 1}))
    assert len(problems) == 1 and "manifest says 2" in problems[0]


def test_meta_row_columns():
    row = TestMetaRow(1, "vowel_harmony_2", Variant.SURFACE, CheckKind.HARMONY_TOKEN, (), ("b", "p", "r"),
                      "Fehler", "errors", 0, 3, "fehler")
    assert row.as_row()[:6] == ["1", "vowel_harmony_2", "surface", "harmony_token", "", "bpr"]
