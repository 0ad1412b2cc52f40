"""Artificial morpheme generation and the per-pattern inventory."""

import csv
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

from tenacity import RetryError, Retrying, retry_if_result, stop_after_attempt

from utils.constants import CONSONANTS, SOURCE_VOWELS, TARGET_VOWELS, MorphemeRole, Phenomenon, Side, Slot, Variant
from utils.exceptions import MorphemeExhaustionError
from utils.logger import get_logger

logger = get_logger('morphemes')

INVENTORY_COLUMNS = ("pattern_id", "variant", "slot", "side", "surface_string")


@dataclass(frozen=True)
class Alphabets:
    consonants: str = CONSONANTS
    vowels: str = TARGET_VOWELS

    def __post_init__(self):
        if not self.consonants or not self.vowels or set(self.consonants) & set(self.vowels):
            raise ValueError("alphabets must be non-empty and disjoint")


@dataclass(frozen=True)
class MorphemeSpec:
    """Generation parameters for one inventory build."""
    source: Alphabets = Alphabets(CONSONANTS, SOURCE_VOWELS)
    target: Alphabets = Alphabets(CONSONANTS, TARGET_VOWELS)
    isolated_length: Tuple[int, int] = (4, 6)
    bound_length: Tuple[int, int] = (4, 6)
    circumfix_length: Tuple[int, int] = (3, 3)
    start: str = "consonant"
    max_rejections: int = 10_000

    def alphabets(self, side: Side) -> Alphabets:
        return self.source if side is Side.SOURCE else self.target


@dataclass(frozen=True)
class ArtificialMorpheme:
    surface: str
    role: MorphemeRole
    language_side: Side

    @property
    def triple(self) -> Tuple[str, str, str]:
        if self.role is not MorphemeRole.CONSONANT_TRIPLE:
            raise ValueError(f"{self.surface!r} is not a consonant triple")
        return tuple(self.surface)


def generate_morpheme(
    rng: random.Random,
    length_range: Tuple[int, int],
    start: str,
    alphabets: Alphabets,
) -> str:
    """Random string alternating consonants and vowels."""
    length = rng.randint(*length_range)
    if start == "random":
        start = rng.choice(("consonant", "vowel"))
    use_consonant = start == "consonant"
    chars = []
    for _ in range(length):
        chars.append(rng.choice(alphabets.consonants if use_consonant else alphabets.vowels))
        use_consonant = not use_consonant
    return "".join(chars)


def is_absent(candidate: str, corpus_tokens: Iterable[str], vocab: Iterable[str]) -> bool:
    """True iff candidate is no vocab entry and no substring of any corpus token (case-insensitive)."""
    needle = candidate.lower()
    if needle in {entry.lower() for entry in vocab}:
        return False
    return not any(needle in token.lower() for token in corpus_tokens)


class AbsenceIndex:
    """Substring index over a corpus token set and exclusion vocabulary.

    Generated morphemes alternate consonants and vowels, so only the
    alternating stretches of each corpus token are indexed.
    """

    def __init__(
        self,
        corpus_tokens: Iterable[str],
        vocab: Iterable[str],
        max_length: int = 6,
        consonants: str = CONSONANTS,
        vowels: str = SOURCE_VOWELS,
    ):
        self.max_length = max_length
        self.consonants = frozenset(consonants)
        self.vowels = frozenset(vowels)
        self.tokens = frozenset(token.lower() for token in corpus_tokens)
        self.vocab = frozenset(entry.lower() for entry in vocab)
        substrings: Set[str] = set()
        for token in self.tokens:
            for run in self._alternating_runs(token):
                n = len(run)
                for i in range(n):
                    for j in range(i + 1, min(n, i + max_length) + 1):
                        substrings.add(run[i:j])
        self.substrings = frozenset(substrings)
        logger.debug("Absence index built", tokens=len(self.tokens), substrings=len(self.substrings))

    def _kind(self, ch: str) -> Optional[str]:
        if ch in self.consonants:
            return "c"
        if ch in self.vowels:
            return "v"
        return None

    def _alternating_runs(self, token: str) -> Iterator[str]:
        start, previous = 0, None
        for i, ch in enumerate(token):
            kind = self._kind(ch)
            if kind is None or kind == previous:
                if i > start:
                    yield token[start:i]
                start = i if kind is not None else i + 1
            previous = kind
        if len(token) > start:
            yield token[start:]

    def _alternates(self, needle: str) -> bool:
        kinds = [self._kind(ch) for ch in needle]
        return None not in kinds and all(a != b for a, b in zip(kinds, kinds[1:]))

    def is_absent(self, candidate: str) -> bool:
        needle = candidate.lower()
        if needle in self.vocab:
            return False
        if len(needle) <= self.max_length and self._alternates(needle):
            return needle not in self.substrings
        return not any(needle in token for token in self.tokens)


def abstract_token_for(pattern_id: str, phenomenon: Phenomenon) -> str:
    """@CIRCUMFIX_1@ style placeholder; reduplication patterns have fixed names."""
    fixed = {
        Phenomenon.REDUP_PARTIAL: "@PARTIAL_REDUPLICATION@",
        Phenomenon.REDUP_TRIPLE: "@TRIPLICATION@",
        Phenomenon.REDUP_FULL: "@FULL_REDUPLICATION@",
    }
    if phenomenon in fixed:
        return fixed[phenomenon]
    number = pattern_id.rsplit("_", 1)[-1]
    if number.isdigit():
        return f"@{phenomenon.value.upper()}_{number}@"
    return f"@{pattern_id.upper()}@"


@dataclass(frozen=True)
class SlotRequest:
    pattern_id: str
    variant: Variant
    slot: Slot
    side: Side
    role: MorphemeRole

    @property
    def name(self) -> str:
        return f"{self.pattern_id}/{self.variant.value}/{self.slot.value}"


def slot_requests(pattern) -> List[SlotRequest]:
    """Slots a pattern needs, in the fixed order they are drawn."""
    pid, phen = pattern.id, pattern.phenomenon
    side = pattern.surface_side
    requests = []

    def add(variant, slot, on_side, role):
        requests.append(SlotRequest(pid, variant, slot, on_side, role))

    if phen is Phenomenon.COMPOUND:
        add(Variant.SURFACE, Slot.BOUND1, side, MorphemeRole.BOUND_COMPOUND)
    elif phen is Phenomenon.CIRCUMFIX:
        add(Variant.SURFACE, Slot.BOUND1, side, MorphemeRole.BOUND_PREFIX)
        add(Variant.SURFACE, Slot.BOUND2, side, MorphemeRole.BOUND_SUFFIX)
    elif phen is Phenomenon.INFIX:
        add(Variant.SURFACE, Slot.BOUND1, side, MorphemeRole.BOUND_INFIX)
    elif phen is Phenomenon.VOWEL_HARMONY:
        add(Variant.SURFACE, Slot.TRIPLE, side, MorphemeRole.CONSONANT_TRIPLE)
    add(Variant.SURFACE, Slot.ISOLATED, side.other, MorphemeRole.ISOLATED)
    add(Variant.ABSTRACT, Slot.ABSTRACT, side, MorphemeRole.ABSTRACT_TOKEN)
    add(Variant.ABSTRACT, Slot.ISOLATED, side.other, MorphemeRole.ABSTRACT_ISOLATED)
    return requests


@dataclass(frozen=True)
class MorphemeInventory:
    assignments: Dict[Tuple[str, Variant], Dict[Slot, ArtificialMorpheme]] = field(default_factory=dict)
    rng_seed: Optional[int] = None

    def get(self, pattern_id: str, variant: Variant, slot: Slot) -> Optional[ArtificialMorpheme]:
        return self.assignments.get((pattern_id, variant), {}).get(slot)

    def surface_of(self, pattern_id: str, variant: Variant, slot: Slot) -> str:
        morpheme = self.get(pattern_id, variant, slot)
        if morpheme is None:
            raise KeyError(f"inventory has no {slot.value} slot for {pattern_id}/{variant.value}")
        return morpheme.surface

    def isolated(self, pattern_id: str, variant: Variant) -> str:
        return self.surface_of(pattern_id, variant, Slot.ISOLATED)

    def abstract_token(self, pattern_id: str) -> str:
        return self.surface_of(pattern_id, Variant.ABSTRACT, Slot.ABSTRACT)

    def bound(self, pattern_id: str) -> Tuple[str, ...]:
        slots = self.assignments.get((pattern_id, Variant.SURFACE), {})
        return tuple(slots[s].surface for s in (Slot.BOUND1, Slot.BOUND2) if s in slots)

    def triple(self, pattern_id: str) -> Optional[Tuple[str, str, str]]:
        morpheme = self.get(pattern_id, Variant.SURFACE, Slot.TRIPLE)
        return morpheme.triple if morpheme else None

    def pattern_ids(self) -> List[str]:
        seen: List[str] = []
        for pid, _ in self.assignments:
            if pid not in seen:
                seen.append(pid)
        return seen

    def covers(self, pattern_id: str) -> bool:
        return (pattern_id, Variant.SURFACE) in self.assignments and (pattern_id, Variant.ABSTRACT) in self.assignments

    def morphemes(self) -> Iterator[Tuple[str, Variant, Slot, ArtificialMorpheme]]:
        for (pid, variant), slots in self.assignments.items():
            for slot, morpheme in slots.items():
                yield pid, variant, slot, morpheme

    def all_surfaces(self) -> List[str]:
        return [m.surface for _, _, _, m in self.morphemes()]

    def to_tsv(self, path: Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, delimiter="\t", lineterminator="\n")
            writer.writerow(INVENTORY_COLUMNS)
            for pid, variant, slot, morpheme in self.morphemes():
                writer.writerow((pid, variant.value, slot.value, morpheme.language_side.value, morpheme.surface))
        logger.info("Inventory written", path=str(path), morphemes=len(self.all_surfaces()))

    @classmethod
    def from_tsv(
        cls,
        path: Path,
        patterns: Optional[Sequence] = None,
        rng_seed: Optional[int] = None,
    ) -> "MorphemeInventory":
        """Load an inventory TSV; with patterns given, roles come from their slot layout."""
        known_roles: Dict[Tuple[str, Variant, Slot], MorphemeRole] = {}
        for pattern in patterns or ():
            for request in slot_requests(pattern):
                known_roles[(request.pattern_id, request.variant, request.slot)] = request.role

        assignments: Dict[Tuple[str, Variant], Dict[Slot, ArtificialMorpheme]] = {}
        with open(path, encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f, delimiter="\t")
            for row in reader:
                variant = Variant(row["variant"])
                slot = Slot(row["slot"])
                role = known_roles.get((row["pattern_id"], variant, slot)) or _role_for(
                    slot, variant, row["surface_string"]
                )
                morpheme = ArtificialMorpheme(row["surface_string"], role, Side(row["side"]))
                assignments.setdefault((row["pattern_id"], variant), {})[slot] = morpheme
        return cls(assignments, rng_seed)


def _role_for(slot: Slot, variant: Variant, surface: str) -> MorphemeRole:
    if slot is Slot.TRIPLE:
        return MorphemeRole.CONSONANT_TRIPLE
    if slot is Slot.ABSTRACT:
        return MorphemeRole.ABSTRACT_TOKEN
    if slot is Slot.ISOLATED:
        return MorphemeRole.ISOLATED if variant is Variant.SURFACE else MorphemeRole.ABSTRACT_ISOLATED
    if slot is Slot.BOUND2:
        return MorphemeRole.BOUND_SUFFIX
    # bound1 is ambiguous on its own; the surface casing tells compounds and prefixes apart
    return MorphemeRole.BOUND_COMPOUND if surface[:1].isupper() and len(surface) > 3 else MorphemeRole.BOUND_PREFIX


def _draw_with_rejection(draw, accept, slot_name: str, max_rejections: int) -> str:
    """Draw candidates until one is accepted; more than max_rejections rejections is exhaustion."""
    retrying = Retrying(
        stop=stop_after_attempt(max_rejections + 1),
        retry=retry_if_result(lambda candidate: not accept(candidate)),
        sleep=lambda _: None,
    )
    try:
        return retrying(draw)
    except RetryError as e:
        raise MorphemeExhaustionError(
            f"no admissible morpheme for slot {slot_name} after {max_rejections} rejections",
            slot=slot_name,
        ) from e


def build_inventory(
    patterns: Sequence,
    corpus_tokens: Iterable[str],
    vocab: Iterable[str],
    seed: int,
    spec: MorphemeSpec = MorphemeSpec(),
    index: Optional[AbsenceIndex] = None,
) -> MorphemeInventory:
    """Assign every pattern's slots by seeded rejection sampling."""
    rng = random.Random(seed)
    index = index or AbsenceIndex(
        corpus_tokens,
        vocab,
        max_length=max(spec.isolated_length[1], spec.bound_length[1]),
        consonants=spec.source.consonants + spec.target.consonants,
        vowels=spec.source.vowels + spec.target.vowels,
    )
    used: Set[str] = set()
    # (pattern id, casefolded surface) of every letter morpheme drawn so far
    pieces: List[Tuple[str, str]] = []
    assignments: Dict[Tuple[str, Variant], Dict[Slot, ArtificialMorpheme]] = {}

    def unused(candidate: str) -> bool:
        return candidate.casefold() not in used

    def apart(candidate: str, pattern_id: str) -> bool:
        key = candidate.casefold()
        return not any(pid != pattern_id and (key in p or p in key) for pid, p in pieces)

    for pattern in patterns:
        for request in slot_requests(pattern):
            alphabets = spec.alphabets(request.side)

            if request.role is MorphemeRole.ABSTRACT_TOKEN:
                surface = abstract_token_for(pattern.id, pattern.phenomenon)
                if not unused(surface):
                    raise MorphemeExhaustionError(f"duplicate abstract token {surface}", slot=request.name)

            elif request.role is MorphemeRole.CONSONANT_TRIPLE:
                surface = _draw_with_rejection(
                    lambda: "".join(rng.choice(alphabets.consonants) for _ in range(3)),
                    unused,
                    request.name,
                    spec.max_rejections,
                )

            else:
                if request.role in (MorphemeRole.BOUND_PREFIX, MorphemeRole.BOUND_SUFFIX):
                    length_range = spec.circumfix_length
                elif request.role in (MorphemeRole.BOUND_COMPOUND, MorphemeRole.BOUND_INFIX):
                    length_range = spec.bound_length
                else:
                    length_range = spec.isolated_length
                surface = _draw_with_rejection(
                    lambda: generate_morpheme(rng, length_range, spec.start, alphabets),
                    lambda c: unused(c) and apart(c, pattern.id) and index.is_absent(c),
                    request.name,
                    spec.max_rejections,
                )
                # German noun orthography for pieces that start a source-side word
                if request.side is Side.SOURCE and request.role in (
                    MorphemeRole.BOUND_COMPOUND, MorphemeRole.BOUND_PREFIX
                ):
                    surface = surface.capitalize()
                pieces.append((pattern.id, surface.casefold()))

            used.add(surface.casefold())
            assignments.setdefault((request.pattern_id, request.variant), {})[request.slot] = ArtificialMorpheme(
                surface, request.role, request.side
            )

    inventory = MorphemeInventory(assignments, seed)
    logger.info("Inventory built", patterns=len(patterns), morphemes=len(used), seed=seed)
    return inventory


def overlapping_morphemes(inventory: MorphemeInventory) -> List[str]:
    """Letter morphemes of different patterns where one surface lies inside the other."""
    pieces = [
        (pid, f"{pid}/{variant.value}/{slot.value}", morpheme.surface.casefold())
        for pid, variant, slot, morpheme in inventory.morphemes()
        if morpheme.role not in (MorphemeRole.CONSONANT_TRIPLE, MorphemeRole.ABSTRACT_TOKEN)
    ]
    problems = []
    for i, (pid, where, key) in enumerate(pieces):
        for other_pid, other_where, other_key in pieces[i + 1:]:
            if pid != other_pid and (key in other_key or other_key in key):
                problems.append(f"{where}: {key!r} overlaps {other_where} {other_key!r}")
    return problems


def check_inventory(inventory: MorphemeInventory, index: AbsenceIndex) -> List[str]:
    """Return a list of invariant violations (empty when the inventory is sound)."""
    problems = []
    seen: Dict[str, str] = {}
    for pid, variant, slot, morpheme in inventory.morphemes():
        key = morpheme.surface.casefold()
        where = f"{pid}/{variant.value}/{slot.value}"
        if key in seen:
            problems.append(f"{where}: duplicate of {seen[key]}")
        seen[key] = where
        if morpheme.role not in (MorphemeRole.CONSONANT_TRIPLE, MorphemeRole.ABSTRACT_TOKEN):
            if not index.is_absent(morpheme.surface):
                problems.append(f"{where}: {morpheme.surface!r} occurs in corpus or vocabulary")
    return problems + overlapping_morphemes(inventory)
