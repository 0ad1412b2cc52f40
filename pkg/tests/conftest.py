from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List

import pytest

from morph.corpus_io import AnnotatedSentencePair, corpus_token_types
from morph.matcher import PatternPair, load_patterns
from morph.morphemes import ArtificialMorpheme, MorphemeInventory, abstract_token_for, build_inventory, slot_requests
from utils.constants import DEFAULT_PATTERNS_PATH, Slot, Variant

from toy_corpus import worked_pairs, toy_pairs

WORKED_PATTERN_IDS = ("compound_1", "circumfix_1", "infix_4", "vowel_harmony_2", "redup_full")

# Morpheme assignments of the worked examples, per pattern: (surface slots, abstract-isolated morpheme)
WORKED_MORPHEMES = {
    "compound_1": ({Slot.BOUND1: "Sona", Slot.ISOLATED: "bico"}, "wuze"),
    "circumfix_1": ({Slot.BOUND1: "jeb", Slot.BOUND2: "fet", Slot.ISOLATED: "wofi"}, "fuge"),
    "infix_4": ({Slot.BOUND1: "yadey", Slot.ISOLATED: "numime"}, "jigaq"),
    "vowel_harmony_2": ({Slot.TRIPLE: "bpr", Slot.ISOLATED: "zoged"}, "gapu"),
    "redup_full": ({Slot.ISOLATED: "gija"}, "jufo"),
}


def make_worked_inventory(patterns: List[PatternPair]) -> MorphemeInventory:
    """Inventory holding exactly the morphemes of the worked examples."""
    assignments = {}
    for pattern in patterns:
        surface, abstract_isolated = WORKED_MORPHEMES[pattern.id]
        for request in slot_requests(pattern):
            if request.variant is Variant.SURFACE:
                text = surface[request.slot]
            elif request.slot is Slot.ABSTRACT:
                text = abstract_token_for(pattern.id, pattern.phenomenon)
            else:
                text = abstract_isolated
            assignments.setdefault((pattern.id, request.variant), {})[request.slot] = ArtificialMorpheme(
                text, request.role, request.side
            )
    return MorphemeInventory(assignments, rng_seed=None)


@pytest.fixture(scope="session")
def patterns() -> List[PatternPair]:
    return load_patterns(DEFAULT_PATTERNS_PATH)


@pytest.fixture(scope="session")
def patterns_by_id(patterns) -> Dict[str, PatternPair]:
    return {p.id: p for p in patterns}


@pytest.fixture(scope="session")
def worked_patterns(patterns_by_id) -> List[PatternPair]:
    return [patterns_by_id[pid] for pid in WORKED_PATTERN_IDS]


@pytest.fixture(scope="session")
def worked_inventory(worked_patterns) -> MorphemeInventory:
    return make_worked_inventory(worked_patterns)


@pytest.fixture
def worked() -> Dict[str, AnnotatedSentencePair]:
    return worked_pairs()


@pytest.fixture(scope="session")
def toy_train(patterns) -> List[AnnotatedSentencePair]:
    return toy_pairs(patterns, per_pattern=8, distractors=10)


@pytest.fixture(scope="session")
def toy_test(patterns, toy_train) -> List[AnnotatedSentencePair]:
    return toy_pairs(patterns, per_pattern=3, distractors=4, offset=3)


@pytest.fixture(scope="session")
def toy_inventory(patterns, toy_train, toy_test) -> MorphemeInventory:
    tokens = corpus_token_types(toy_train) | corpus_token_types(toy_test)
    return build_inventory(patterns, tokens, vocab={"bico", "wofi"}, seed=7)


class RecordingPool(ProcessPoolExecutor):
    """ProcessPoolExecutor that remembers how many workers each pool was opened with."""

    opened: List[int] = []

    def __init__(self, max_workers=None, **kwargs):
        RecordingPool.opened.append(max_workers)
        super().__init__(max_workers=max_workers, **kwargs)


@pytest.fixture
def worker_pool(monkeypatch) -> List[int]:
    """Send toy-sized inputs through the real process pool."""
    RecordingPool.opened = []
    monkeypatch.setattr("utils.workers.MIN_ITEMS_PER_WORKER", 1)
    monkeypatch.setattr("utils.workers.ProcessPoolExecutor", RecordingPool)
    return RecordingPool.opened
