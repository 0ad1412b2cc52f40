import random
import re
from dataclasses import replace

import pytest

from morph.morphemes import (
    AbsenceIndex,
    Alphabets,
    MorphemeInventory,
    MorphemeSpec,
    abstract_token_for,
    build_inventory,
    check_inventory,
    generate_morpheme,
    is_absent,
    overlapping_morphemes,
)
from utils.constants import ABSTRACT_TOKEN_PATTERN, CONSONANTS, MorphemeRole, Phenomenon, Side, Slot, Variant
from utils.exceptions import MorphemeExhaustionError


def _alternates(word: str, consonants: str = CONSONANTS) -> bool:
    kinds = [ch in consonants for ch in word.lower()]
    return all(a != b for a, b in zip(kinds, kinds[1:]))


def _random_corpus(n: int, seed: int = 3):
    rng = random.Random(seed)
    letters = "abcdefghijklmnopqrstuvwxyzäöüß"
    return {"".join(rng.choice(letters) for _ in range(rng.randint(3, 10))) for _ in range(n)}


def test_generate_morpheme_shape():
    rng = random.Random(1)
    for _ in range(200):
        word = generate_morpheme(rng, (4, 6), "consonant", Alphabets())
        assert 4 <= len(word) <= 6
        assert word[0] in CONSONANTS
        assert _alternates(word)


def test_is_absent_reference_definition():
    assert is_absent("bico", {"Haus", "Räume"}, set())
    assert not is_absent("bico", set(), {"bico"})
    assert not is_absent("ume", {"Räume"}, set())
    assert not is_absent("RÄU", {"Räume"}, set())


def test_absence_index_agrees_with_reference():
    corpus = _random_corpus(2000)
    vocab = {"bico", "wofi"}
    index = AbsenceIndex(corpus, vocab)
    rng = random.Random(5)
    for _ in range(500):
        candidate = generate_morpheme(rng, (3, 6), "random", Alphabets())
        assert index.is_absent(candidate) == is_absent(candidate, corpus, vocab)


def test_abstract_token_names():
    assert abstract_token_for("circumfix_1", Phenomenon.CIRCUMFIX) == "@CIRCUMFIX_1@"
    assert abstract_token_for("vowel_harmony_2", Phenomenon.VOWEL_HARMONY) == "@VOWEL_HARMONY_2@"
    assert abstract_token_for("redup_full", Phenomenon.REDUP_FULL) == "@FULL_REDUPLICATION@"
    assert abstract_token_for("redup_triple", Phenomenon.REDUP_TRIPLE) == "@TRIPLICATION@"
    assert re.match(ABSTRACT_TOKEN_PATTERN, abstract_token_for("infix_4", Phenomenon.INFIX))


def test_inventory_slot_layout(patterns, toy_inventory, patterns_by_id):
    compound = toy_inventory.get("compound_1", Variant.SURFACE, Slot.BOUND1)
    assert compound.role is MorphemeRole.BOUND_COMPOUND
    assert compound.language_side is Side.SOURCE
    assert compound.surface[0].isupper()

    prefix, suffix = toy_inventory.bound("circumfix_2")
    assert len(prefix) == len(suffix) == 3
    assert prefix[0].isupper()  # source-side circumfix
    assert toy_inventory.bound("circumfix_1")[0].islower()

    triple = toy_inventory.triple("vowel_harmony_2")
    assert len(triple) == 3 and all(c in CONSONANTS for c in triple)

    assert toy_inventory.get("redup_full", Variant.SURFACE, Slot.ISOLATED).language_side is Side.SOURCE
    assert toy_inventory.abstract_token("compound_1") == "@COMPOUND_1@"
    assert all(toy_inventory.covers(p.id) for p in patterns)


def test_inventory_tsv_round_trip(tmp_path, patterns, toy_inventory):
    path = tmp_path / "inv.tsv"
    toy_inventory.to_tsv(path)
    loaded = MorphemeInventory.from_tsv(path, patterns)
    assert loaded.assignments == toy_inventory.assignments
    second = tmp_path / "again.tsv"
    loaded.to_tsv(second)
    assert second.read_bytes() == path.read_bytes()


def test_same_seed_same_inventory(patterns):
    corpus = _random_corpus(500)
    first = build_inventory(patterns, corpus, set(), seed=11)
    second = build_inventory(patterns, corpus, set(), seed=11)
    other = build_inventory(patterns, corpus, set(), seed=12)
    assert first.assignments == second.assignments
    assert first.all_surfaces() != other.all_surfaces()


def test_exhaustion_is_reported(patterns):
    spec = MorphemeSpec(
        source=Alphabets("b", "a"),
        target=Alphabets("b", "a"),
        isolated_length=(4, 4),
        bound_length=(4, 4),
        circumfix_length=(3, 3),
        max_rejections=50,
    )
    with pytest.raises(MorphemeExhaustionError):
        build_inventory(patterns, set(), set(), seed=1, spec=spec)


def test_thousand_seeded_inventories_hold_their_invariants(patterns):
    corpus = _random_corpus(10_000)
    vocab = {"bico", "wofi", "gija", "numime"}
    spec = MorphemeSpec()
    index = AbsenceIndex(
        corpus,
        vocab,
        max_length=6,
        consonants=spec.source.consonants + spec.target.consonants,
        vowels=spec.source.vowels + spec.target.vowels,
    )
    lowered_corpus = {t.lower() for t in corpus}
    for seed in range(1000):
        inventory = build_inventory(patterns, corpus, vocab, seed=seed, spec=spec, index=index)
        assert check_inventory(inventory, index) == []
        surfaces = [m.surface.casefold() for _, _, _, m in inventory.morphemes()]
        assert len(surfaces) == len(set(surfaces))
        for _, _, _, morpheme in inventory.morphemes():
            if morpheme.role in (MorphemeRole.ABSTRACT_TOKEN, MorphemeRole.CONSONANT_TRIPLE):
                continue
            word = morpheme.surface.lower()
            assert 3 <= len(word) <= 6
            assert _alternates(word)
            assert word not in vocab
            assert word not in lowered_corpus


def test_overlap_across_patterns_is_reported(worked_inventory):
    assert overlapping_morphemes(worked_inventory) == []
    assignments = {key: dict(slots) for key, slots in worked_inventory.assignments.items()}
    gija = assignments[("redup_full", Variant.SURFACE)][Slot.ISOLATED]
    assignments[("redup_full", Variant.SURFACE)][Slot.ISOLATED] = replace(gija, surface="numim")
    inventory = MorphemeInventory(assignments)

    problems = overlapping_morphemes(inventory)
    assert len(problems) == 1
    assert "infix_4" in problems[0] and "redup_full" in problems[0]
    index = AbsenceIndex(set(), set(), max_length=6, consonants=CONSONANTS, vowels="aeiou")
    assert problems[0] in check_inventory(inventory, index)


def test_overlap_within_one_pattern_is_allowed(worked_inventory):
    assignments = {key: dict(slots) for key, slots in worked_inventory.assignments.items()}
    fet = assignments[("circumfix_1", Variant.SURFACE)][Slot.BOUND2]
    # circumfix halves of the same pattern may share letters
    assignments[("circumfix_1", Variant.SURFACE)][Slot.BOUND2] = replace(fet, surface="jebo")
    assert overlapping_morphemes(MorphemeInventory(assignments)) == []
