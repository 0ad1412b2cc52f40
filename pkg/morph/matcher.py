"""Pattern-pair configuration and insertion-site matching."""

import csv
import random
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple, Union

from morph.corpus_io import AnnotatedSentence, AnnotatedSentencePair
from utils.constants import (
    CASE_RELS,
    MISSING_LABELS,
    MODIFIER_RELS,
    NUMMOD_RELS,
    PREP_OBJECT_RELS,
    TRIGGER_UPOS,
    BaseSelector,
    Phenomenon,
    Side,
)
from utils.exceptions import ConfigurationError
from utils.logger import get_logger
from utils.workers import ordered_map

logger = get_logger('matcher')

PATTERN_COLUMNS = (
    "id", "phenomenon", "surface_side", "src_lemmas", "trg_lemmas", "base_selector",
    "max_train_insertions", "max_test_insertions", "trigger_repeat",
)
_REQUIRED_COLUMNS = PATTERN_COLUMNS[:6]
_UNSET = ("", "-", "_")

# prep_object fallback: how far right of an unlabelled preposition its noun may sit
PREP_FALLBACK_WINDOW = 4
_PREP_FALLBACK_STOP = frozenset({"ADP", "VERB", "AUX", "PUNCT"})


@dataclass(frozen=True)
class PatternPair:
    id: str
    phenomenon: Phenomenon
    surface_side: Side
    src_lemmas: FrozenSet[str] = frozenset()
    trg_lemmas: FrozenSet[str] = frozenset()
    base_selector: BaseSelector = BaseSelector.RANDOM_ALIGNED_NOUN
    max_train_insertions: Optional[int] = None
    max_test_insertions: Optional[int] = None
    trigger_repeat: int = 1

    def __post_init__(self):
        if self.phenomenon is Phenomenon.COMPOUND:
            if self.base_selector is not BaseSelector.RANDOM_ALIGNED_NOUN or self.src_lemmas or self.trg_lemmas:
                raise ConfigurationError(
                    f"compound pattern {self.id} must use random_aligned_noun without triggers", pattern_id=self.id
                )
            if self.surface_side is not Side.SOURCE:
                raise ConfigurationError(f"compound pattern {self.id} must be realised on the source side",
                                         pattern_id=self.id)
        else:
            if self.base_selector is BaseSelector.RANDOM_ALIGNED_NOUN:
                raise ConfigurationError(f"pattern {self.id} needs a trigger-based selector", pattern_id=self.id)
            if not self.src_lemmas or not self.trg_lemmas:
                raise ConfigurationError(f"pattern {self.id} needs source and target trigger lemmas",
                                         pattern_id=self.id)
        if self.phenomenon.is_reduplication and self.base_selector is not BaseSelector.ADJECTIVE_AFTER_MODIFIER:
            raise ConfigurationError(f"reduplication pattern {self.id} must use adjective_after_modifier",
                                     pattern_id=self.id)
        if self.phenomenon in (Phenomenon.REDUP_PARTIAL, Phenomenon.REDUP_TRIPLE) and self.surface_side is Side.TARGET:
            # no output check exists for partial copies on the evaluated side
            raise ConfigurationError(f"pattern {self.id}: partial reduplication is source-side only",
                                     pattern_id=self.id)
        if self.trigger_repeat < 1:
            raise ConfigurationError(f"pattern {self.id}: trigger_repeat must be >= 1", pattern_id=self.id)

    @property
    def is_compound(self) -> bool:
        return self.base_selector is BaseSelector.RANDOM_ALIGNED_NOUN

    @property
    def trigger_upos(self) -> FrozenSet[str]:
        return TRIGGER_UPOS[self.base_selector]

    @property
    def base_upos(self) -> str:
        return "ADJ" if self.base_selector is BaseSelector.ADJECTIVE_AFTER_MODIFIER else "NOUN"

    def lemmas(self, side: Side) -> FrozenSet[str]:
        return self.src_lemmas if side is Side.SOURCE else self.trg_lemmas


@dataclass(frozen=True)
class MatchSite:
    pair_id: int
    pattern_id: str
    src_base_idx: int
    trg_base_idx: int
    src_trigger_idx: Optional[int] = None
    trg_trigger_idx: Optional[int] = None
    # further trigger tokens ("sehr ," of "sehr , sehr") that go with the trigger
    src_extra: Tuple[int, ...] = ()
    trg_extra: Tuple[int, ...] = ()

    def base_idx(self, side: Side) -> int:
        return self.src_base_idx if side is Side.SOURCE else self.trg_base_idx

    def trigger_idx(self, side: Side) -> Optional[int]:
        return self.src_trigger_idx if side is Side.SOURCE else self.trg_trigger_idx

    def extra(self, side: Side) -> Tuple[int, ...]:
        return self.src_extra if side is Side.SOURCE else self.trg_extra


@dataclass
class ScanResult:
    sites: List[MatchSite] = field(default_factory=list)
    counts: Dict[str, int] = field(default_factory=dict)


def _split_lemmas(value: str) -> FrozenSet[str]:
    value = (value or "").strip()
    if value in _UNSET:
        return frozenset()
    return frozenset(lemma.strip().lower() for lemma in value.split("|") if lemma.strip())


def _optional_int(value: Optional[str]) -> Optional[int]:
    value = (value or "").strip()
    return None if value in _UNSET else int(value)


def load_patterns(path: Union[str, Path]) -> List[PatternPair]:
    """Read a pattern TSV; '#' lines are comments, row order is match priority."""
    with open(path, encoding="utf-8", newline="") as f:
        lines = [line for line in f if line.strip() and not line.lstrip().startswith("#")]

    reader = csv.DictReader(lines, delimiter="\t")
    missing = [c for c in _REQUIRED_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise ConfigurationError(f"pattern file {path} lacks columns: {', '.join(missing)}", path=str(path))

    patterns: List[PatternPair] = []
    seen = set()
    for row_no, row in enumerate(reader, start=1):
        try:
            pattern = PatternPair(
                id=row["id"].strip(),
                phenomenon=Phenomenon(row["phenomenon"].strip()),
                surface_side=Side(row["surface_side"].strip()),
                src_lemmas=_split_lemmas(row["src_lemmas"]),
                trg_lemmas=_split_lemmas(row["trg_lemmas"]),
                base_selector=BaseSelector(row["base_selector"].strip()),
                max_train_insertions=_optional_int(row.get("max_train_insertions")),
                max_test_insertions=_optional_int(row.get("max_test_insertions")),
                trigger_repeat=_optional_int(row.get("trigger_repeat")) or 1,
            )
        except ValueError as e:
            raise ConfigurationError(f"pattern file {path}, row {row_no}: {e}", path=str(path), row=row_no) from e
        if pattern.id in seen:
            raise ConfigurationError(f"duplicate pattern id {pattern.id}", path=str(path), row=row_no)
        seen.add(pattern.id)
        patterns.append(pattern)

    logger.debug("Patterns loaded", path=str(path), patterns=len(patterns))
    return patterns


def _has_labels(sentence: AnnotatedSentence, pos: int) -> bool:
    return sentence.token_at(pos).deprel not in MISSING_LABELS


def _is_trigger(sentence: AnnotatedSentence, pos: int, pattern: PatternPair, side: Side) -> bool:
    tok = sentence.token_at(pos)
    if tok.lemma_key not in pattern.lemmas(side) and tok.form.lower() not in pattern.lemmas(side):
        return False
    return tok.upos in pattern.trigger_upos or tok.upos in MISSING_LABELS


def _prep_object(sentence: AnnotatedSentence, pos: int) -> Optional[int]:
    """Noun governed by the preposition at pos."""
    if _has_labels(sentence, pos):
        tok = sentence.token_at(pos)
        head = sentence.head_pos(pos)
        if tok.deprel.split(":")[0] in CASE_RELS and head is not None and sentence.token_at(head).upos == "NOUN":
            return head
        for dep in sentence.dependents(pos):
            dep_tok = sentence.token_at(dep)
            if dep_tok.upos == "NOUN" and dep_tok.deprel.split(":")[0] in PREP_OBJECT_RELS:
                return dep
        return None

    for nxt in range(pos + 1, min(len(sentence), pos + 1 + PREP_FALLBACK_WINDOW)):
        upos = sentence.token_at(nxt).upos
        if upos == "NOUN":
            return nxt
        if upos in _PREP_FALLBACK_STOP:
            break
    return None


def _cardinal_head(sentence: AnnotatedSentence, pos: int) -> Optional[int]:
    """Noun modified by the numeral at pos."""
    if _has_labels(sentence, pos):
        tok = sentence.token_at(pos)
        head = sentence.head_pos(pos)
        if tok.deprel.split(":")[0] in NUMMOD_RELS and head is not None and sentence.token_at(head).upos == "NOUN":
            return head
        return None
    nxt = pos + 1
    if nxt < len(sentence) and sentence.token_at(nxt).upos == "NOUN":
        return nxt
    return None


def _modified_adjective(sentence: AnnotatedSentence, pos: int, repeat: int) -> Optional[Tuple[int, Tuple[int, ...]]]:
    """Adjective right after the modifier at pos, plus the span of repeated modifiers before it.

    The modifier must occur exactly `repeat` times in a row (commas between
    copies allowed) so "sehr gut" and "sehr , sehr gut" go to different patterns.
    """
    adj = pos + 1
    if adj >= len(sentence) or sentence.token_at(adj).upos != "ADJ":
        return None
    if _has_labels(sentence, pos):
        tok = sentence.token_at(pos)
        if sentence.head_pos(pos) != adj or tok.deprel.split(":")[0] not in MODIFIER_RELS:
            return None

    lemma = sentence.token_at(pos).lemma_key
    count, first = 1, pos
    j = pos - 1
    while j >= 0:
        tok = sentence.token_at(j)
        if tok.form == ",":
            j -= 1
            continue
        if tok.lemma_key != lemma:
            break
        count += 1
        first = j
        j -= 1
    if count != repeat:
        return None
    return adj, tuple(range(first, pos))


def _side_base(
    sentence: AnnotatedSentence, pos: int, pattern: PatternPair
) -> Optional[Tuple[int, Tuple[int, ...]]]:
    selector = pattern.base_selector
    if selector is BaseSelector.PREP_OBJECT:
        base = _prep_object(sentence, pos)
        return (base, ()) if base is not None else None
    if selector is BaseSelector.CARDINAL_HEAD:
        base = _cardinal_head(sentence, pos)
        return (base, ()) if base is not None else None
    if selector is BaseSelector.ADJECTIVE_AFTER_MODIFIER:
        return _modified_adjective(sentence, pos, pattern.trigger_repeat)
    return None


def iter_pattern_sites(pair: AnnotatedSentencePair, pattern: PatternPair) -> Iterator[MatchSite]:
    """Every site of a trigger pattern, in left-to-right source order."""
    if pattern.is_compound:
        return

    for s_trig in range(len(pair.src)):
        if not _is_trigger(pair.src, s_trig, pattern, Side.SOURCE):
            continue
        src_hit = _side_base(pair.src, s_trig, pattern)
        if src_hit is None:
            continue
        s_base, s_extra = src_hit
        if pair.src.token_at(s_base).upos != pattern.base_upos:
            continue

        for t_trig in pair.aligned_targets(s_trig):
            if not _is_trigger(pair.trg, t_trig, pattern, Side.TARGET):
                continue
            trg_hit = _side_base(pair.trg, t_trig, pattern)
            if trg_hit is None:
                continue
            t_base, t_extra = trg_hit
            if pair.trg.token_at(t_base).upos != pattern.base_upos:
                continue
            if not pair.is_one_to_one(s_base, t_base):
                continue
            yield MatchSite(
                pair_id=pair.pair_id,
                pattern_id=pattern.id,
                src_base_idx=s_base,
                trg_base_idx=t_base,
                src_trigger_idx=s_trig,
                trg_trigger_idx=t_trig,
                src_extra=s_extra,
                trg_extra=t_extra,
            )
            break


def match_pattern(pair: AnnotatedSentencePair, pattern: PatternPair) -> Optional[MatchSite]:
    """First site of a trigger pattern in left-to-right source order, or None."""
    return next(iter_pattern_sites(pair, pattern), None)


def compound_candidates(pair: AnnotatedSentencePair) -> List[Tuple[int, int]]:
    """(source, target) NOUN positions that are aligned one-to-one."""
    candidates = []
    for s, tok in enumerate(pair.src.tokens):
        if tok.upos != "NOUN":
            continue
        targets = pair.aligned_targets(s)
        if len(targets) != 1:
            continue
        t = targets[0]
        if pair.trg.token_at(t).upos == "NOUN" and pair.is_one_to_one(s, t):
            candidates.append((s, t))
    return candidates


def match_compound_site(
    pair: AnnotatedSentencePair, rng: random.Random, pattern_id: str = "compound"
) -> Optional[MatchSite]:
    """Uniformly sample one one-to-one aligned NOUN pair."""
    candidates = compound_candidates(pair)
    if not candidates:
        return None
    s, t = rng.choice(candidates)
    return MatchSite(pair_id=pair.pair_id, pattern_id=pattern_id, src_base_idx=s, trg_base_idx=t)


def validate_site(site: MatchSite, pair: AnnotatedSentencePair, pattern: PatternPair) -> List[str]:
    """Re-check a site's alignment and POS invariants; returns the violations found."""
    problems = []
    if not pair.is_aligned(site.src_base_idx, site.trg_base_idx):
        problems.append(f"pair {site.pair_id}: base {site.src_base_idx}-{site.trg_base_idx} not aligned")
    for side in (Side.SOURCE, Side.TARGET):
        sentence = pair.src if side is Side.SOURCE else pair.trg
        if sentence.token_at(site.base_idx(side)).upos != pattern.base_upos:
            problems.append(f"pair {site.pair_id}: {side.value} base is not {pattern.base_upos}")
    if site.src_trigger_idx is not None or site.trg_trigger_idx is not None:
        if site.src_trigger_idx is None or site.trg_trigger_idx is None:
            problems.append(f"pair {site.pair_id}: trigger present on one side only")
        elif not pair.is_aligned(site.src_trigger_idx, site.trg_trigger_idx):
            problems.append(
                f"pair {site.pair_id}: trigger {site.src_trigger_idx}-{site.trg_trigger_idx} not aligned"
            )
    return problems


def _first_trigger_match(
    pair: AnnotatedSentencePair, patterns: Sequence[PatternPair]
) -> Tuple[Optional[MatchSite], bool]:
    """Highest-priority trigger site of a pair, and whether it could host a compound."""
    for pattern in patterns:
        site = match_pattern(pair, pattern)
        if site is not None:
            return site, False
    return None, bool(compound_candidates(pair))


def scan_corpus(
    pairs: Sequence[AnnotatedSentencePair],
    patterns: Sequence[PatternPair],
    seed: Union[int, str] = 0,
    threads: int = 1,
) -> ScanResult:
    """At most one site per pair.

    Trigger patterns are tried in config order and the first match claims the
    pair. Pairs no trigger pattern claimed but holding an aligned noun pair are
    shuffled with the seed and dealt round-robin to the compound patterns.
    """
    trigger_patterns = [p for p in patterns if not p.is_compound]
    compound_patterns = [p for p in patterns if p.is_compound]

    results = ordered_map(partial(_first_trigger_match, patterns=trigger_patterns), list(pairs), threads)

    sites: List[MatchSite] = []
    unclaimed: List[AnnotatedSentencePair] = []
    for pair, (site, compound_ok) in zip(pairs, results):
        if site is not None:
            sites.append(site)
        elif compound_ok:
            unclaimed.append(pair)

    if compound_patterns and unclaimed:
        order = list(range(len(unclaimed)))
        random.Random(f"{seed}:compound").shuffle(order)
        for rank, idx in enumerate(order):
            pair = unclaimed[idx]
            pattern = compound_patterns[rank % len(compound_patterns)]
            site = match_compound_site(pair, random.Random(f"{seed}:{pair.pair_id}"), pattern.id)
            if site is not None:
                sites.append(site)

    sites.sort(key=lambda s: s.pair_id)
    counts = {p.id: 0 for p in patterns}
    for site in sites:
        counts[site.pattern_id] += 1

    logger.info("Corpus scanned", pairs=len(pairs), sites=len(sites), compound_pool=len(unclaimed))
    return ScanResult(sites, counts)
