"""Substitution-based candidates, fluency scores and frequency-balanced test assembly."""

import csv
import math
import random
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from morph.builder import Manifest, TestItem, base_frequency, bucket_of, record_meta
from morph.corpus_io import AnnotatedSentencePair, Token, render
from morph.matcher import PatternPair, iter_pattern_sites
from morph.morphemes import MorphemeInventory
from morph.transforms import transform_site
from utils.constants import BUCKET_LABELS, VOWELS, BaseSelector, Variant
from utils.exceptions import ScoreFileError
from utils.logger import get_logger

logger = get_logger('augmenter')

ORIGINAL = "original"
AUGMENTED = "augmented"


class SubstitutionKind(str, Enum):
    PREP_SWAP = "prep_swap"
    CARDINAL_TO_TWO = "cardinal_to_two"
    MODIFIER_INSERT = "modifier_insert"


@dataclass(frozen=True)
class AugCandidate:
    id: str
    origin: int
    kind: SubstitutionKind
    pair: AnnotatedSentencePair
    # pattern whose trigger was substituted, and that trigger's source position in `pair`
    pattern_id: Optional[str] = None
    src_trigger_idx: Optional[int] = None
    score: Optional[float] = None
    scored_by: Optional[str] = None

    @property
    def src_text(self) -> str:
        return render(self.pair.src)

    @property
    def trg_text(self) -> str:
        return render(self.pair.trg)


def _lemma_pairs(patterns: Sequence[PatternPair], selector: BaseSelector) -> List[Tuple[str, str, int, str]]:
    """Distinct (source lemma, target lemma, repeat) trigger pairs of one selector, config order.

    Each carries the id of the first pattern that owns it.
    """
    seen: Dict[Tuple[str, str, int], str] = {}
    for p in patterns:
        if p.base_selector is not selector:
            continue
        for src in sorted(p.src_lemmas):
            for trg in sorted(p.trg_lemmas):
                seen.setdefault((src, trg, p.trigger_repeat), p.id)
    return [(src, trg, repeat, pid) for (src, trg, repeat), pid in seen.items()]


def _match_case(template: str, word: str) -> str:
    return word[:1].upper() + word[1:] if template[:1].isupper() else word


def _substitute(pair: AnnotatedSentencePair, s: int, t: int, src_word: str, trg_word: str) -> AnnotatedSentencePair:
    src = pair.src.replace_token(s, _match_case(pair.src.token_at(s).form, src_word), lemma=src_word)
    trg = pair.trg.replace_token(t, _match_case(pair.trg.token_at(t).form, trg_word), lemma=trg_word)
    return pair.with_sentences(src, trg, pair.alignment)


def _modifier_tokens(lemma: str, repeat: int, head: int) -> List[Token]:
    """Modifier tokens governed by the adjective at 1-based head, e.g. "sehr , sehr"."""
    tokens: List[Token] = []
    for k in range(repeat):
        if k:
            tokens.append(Token(0, ",", ",", "PUNCT", head, "punct"))
        tokens.append(Token(0, lemma, lemma, "ADV", head, "advmod"))
    return tokens


def _insert_modifier(
    pair: AnnotatedSentencePair, s: int, t: int, src_lemma: str, trg_lemma: str, repeat: int
) -> AnnotatedSentencePair:
    src_new = _modifier_tokens(src_lemma, repeat, s + 1)
    trg_new = _modifier_tokens(trg_lemma, repeat, t + 1)
    k = len(src_new)
    alignment = {(a + k if a >= s else a, b + k if b >= t else b) for a, b in pair.alignment}
    alignment.update((s + i, t + i) for i in range(k))
    return pair.with_sentences(pair.src.insert_tokens(s, src_new), pair.trg.insert_tokens(t, trg_new), alignment)


def _already_modified(sentence, pos: int, lemma: str) -> bool:
    return pos > 0 and sentence.token_at(pos - 1).lemma_key == lemma


def generate_candidates(
    pair: AnnotatedSentencePair,
    patterns: Sequence[PatternPair],
    rng: Optional[random.Random] = None,
    limit: int = 50,
) -> List[AugCandidate]:
    """Preposition swaps, cardinals set to "two" and inserted modifiers, at most `limit` per pair."""
    preps = _lemma_pairs(patterns, BaseSelector.PREP_OBJECT)
    cardinals = _lemma_pairs(patterns, BaseSelector.CARDINAL_HEAD)
    modifiers = _lemma_pairs(patterns, BaseSelector.ADJECTIVE_AFTER_MODIFIER)

    # (kind, new pair, owning pattern, source position of the substituted trigger)
    variants: List[Tuple[SubstitutionKind, AnnotatedSentencePair, str, int]] = []
    for s, s_tok in enumerate(pair.src.tokens):
        for t in pair.aligned_targets(s):
            t_tok = pair.trg.token_at(t)
            if s_tok.upos == "ADP" and t_tok.upos == "ADP":
                for src_lemma, trg_lemma, _, pid in preps:
                    if src_lemma != s_tok.lemma_key or trg_lemma != t_tok.lemma_key:
                        new_pair = _substitute(pair, s, t, src_lemma, trg_lemma)
                        variants.append((SubstitutionKind.PREP_SWAP, new_pair, pid, s))
            elif s_tok.upos == "NUM" and t_tok.upos == "NUM":
                head = pair.src.head_pos(s)
                nxt = s + 1 if s + 1 < len(pair.src) else None
                modifies_noun = any(
                    pos is not None and pair.src.token_at(pos).upos == "NOUN" for pos in (head, nxt)
                )
                if not modifies_noun:
                    continue
                for src_lemma, trg_lemma, _, pid in cardinals:
                    if s_tok.lemma_key != src_lemma:
                        new_pair = _substitute(pair, s, t, src_lemma, trg_lemma)
                        variants.append((SubstitutionKind.CARDINAL_TO_TWO, new_pair, pid, s))
            elif s_tok.upos == "ADJ" and t_tok.upos == "ADJ" and pair.is_one_to_one(s, t):
                for src_lemma, trg_lemma, repeat, pid in modifiers:
                    if _already_modified(pair.src, s, src_lemma) or _already_modified(pair.trg, t, trg_lemma):
                        continue
                    new_pair = _insert_modifier(pair, s, t, src_lemma, trg_lemma, repeat)
                    # repeated copies are comma-separated; the last one sits right before the adjective
                    last_modifier = s + 2 * repeat - 2
                    variants.append((SubstitutionKind.MODIFIER_INSERT, new_pair, pid, last_modifier))

    candidates = [
        AugCandidate(f"{pair.pair_id}:{k}", pair.pair_id, kind, new_pair, pid, trigger)
        for k, (kind, new_pair, pid, trigger) in enumerate(variants)
    ]
    if len(candidates) > limit:
        rng = rng or random.Random(pair.pair_id)
        keep = sorted(rng.sample(range(len(candidates)), limit))
        candidates = [candidates[i] for i in keep]
    return candidates


class UnigramScorer:
    """Add-one smoothed unigram cost delta; stands in when no fluency score is supplied."""

    def __init__(self, src_lines: Iterable[str], trg_lines: Iterable[str]):
        self.src_counts = Counter(tok.casefold() for line in src_lines for tok in line.split())
        self.trg_counts = Counter(tok.casefold() for line in trg_lines for tok in line.split())

    @staticmethod
    def _cost(counts: Counter, tokens: Sequence[str]) -> float:
        total = sum(counts.values())
        vocab = len(counts) + 1
        return -sum(math.log((counts[tok.casefold()] + 1) / (total + vocab)) for tok in tokens)

    def delta(self, original: AnnotatedSentencePair, candidate: AnnotatedSentencePair) -> Tuple[float, float]:
        src = self._cost(self.src_counts, candidate.src.forms) - self._cost(self.src_counts, original.src.forms)
        trg = self._cost(self.trg_counts, candidate.trg.forms) - self._cost(self.trg_counts, original.trg.forms)
        return src, trg

    def score(self, original: AnnotatedSentencePair, candidate: AnnotatedSentencePair) -> float:
        src, trg = self.delta(original, candidate)
        return (src + trg) / 2


def read_scores(path: Path) -> Dict[str, Tuple[float, float]]:
    """candidate_id -> (src_delta, trg_delta)."""
    scores: Dict[str, Tuple[float, float]] = {}
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#") or line.startswith("candidate_id\t"):
                continue
            cells = line.split("\t")
            if len(cells) != 3:
                raise ScoreFileError(f"{path}:{line_no}: expected 3 columns, got {len(cells)}", line_no=line_no)
            try:
                scores[cells[0]] = (float(cells[1]), float(cells[2]))
            except ValueError as e:
                raise ScoreFileError(f"{path}:{line_no}: non-numeric delta", line_no=line_no) from e
    return scores


def attach_scores(
    candidates: Sequence[AugCandidate],
    scores: Optional[Mapping[str, Tuple[float, float]]],
    fallback: Optional[UnigramScorer] = None,
    originals: Optional[Mapping[int, AnnotatedSentencePair]] = None,
) -> List[AugCandidate]:
    """score = mean of source and target deltas; lower is more natural."""
    scores = scores or {}
    known = {c.id for c in candidates}
    for unknown in sorted(set(scores) - known):
        logger.warning("Score for unknown candidate ignored", candidate_id=unknown)

    scored: List[AugCandidate] = []
    fallback_used = 0
    for candidate in candidates:
        if candidate.id in scores:
            src_delta, trg_delta = scores[candidate.id]
            scored.append(replace(candidate, score=(src_delta + trg_delta) / 2, scored_by="file"))
        elif fallback is not None and originals is not None and candidate.origin in originals:
            score = fallback.score(originals[candidate.origin], candidate.pair)
            scored.append(replace(candidate, score=score, scored_by="fallback"))
            fallback_used += 1
        else:
            scored.append(candidate)
    if fallback_used:
        logger.info("Fallback scorer used", candidates=fallback_used)
    return scored


def candidate_items(
    candidates: Sequence[AugCandidate],
    patterns: Sequence[PatternPair],
    inventory: MorphemeInventory,
    manifest: Manifest,
    variants: Sequence[Variant] = (Variant.SURFACE, Variant.ABSTRACT),
    vowels: str = VOWELS,
) -> Dict[Variant, List[TestItem]]:
    """Rewrite each candidate at its substituted trigger, with the pattern that trigger belongs to.

    Candidates whose trigger no longer yields a site, or whose surface rule does
    not apply, are dropped.
    """
    by_id = {p.id: p for p in patterns}
    items: Dict[Variant, List[TestItem]] = {v: [] for v in variants}
    dropped = 0
    for candidate in candidates:
        pattern = by_id.get(candidate.pattern_id)
        site = surface = None
        if pattern is not None:
            site = next(
                (s for s in iter_pattern_sites(candidate.pair, pattern)
                 if s.src_trigger_idx == candidate.src_trigger_idx),
                None,
            )
        if site is not None:
            surface = transform_site(site, candidate.pair, pattern, inventory, Variant.SURFACE, vowels)
        if surface is None:
            dropped += 1
            continue
        for variant in variants:
            record = surface if variant is Variant.SURFACE else transform_site(
                site, candidate.pair, pattern, inventory, variant, vowels
            )
            freq = base_frequency(manifest, record.pattern_id, record.base_lemma)
            meta = replace(
                record_meta(record, 0, freq),
                bucket=bucket_of(freq),
                origin=AUGMENTED,
                score=candidate.score,
                item_id=candidate.id,
            )
            items[variant].append(TestItem(meta, record.src_text, record.trg_text))
    if dropped:
        logger.info("Candidates without a usable site dropped", dropped=dropped)
    return items


def _sort_key(item: TestItem):
    score = item.meta.score
    return (score is None, score if score is not None else 0.0, item.meta.item_id or "")


def assemble_balanced(
    originals: Sequence[TestItem],
    candidates: Sequence[TestItem],
    cap: int = 100,
    pattern_order: Optional[Sequence[str]] = None,
) -> List[TestItem]:
    """Per (pattern, bucket): originals first, then candidates by ascending score, up to cap."""
    groups: Dict[Tuple[str, str], Tuple[List[TestItem], List[TestItem]]] = {}
    for origin, pool in ((0, originals), (1, candidates)):
        for item in pool:
            meta = item.meta
            bucket = meta.bucket or bucket_of(meta.base_train_freq)
            tagged = TestItem(
                replace(meta, bucket=bucket, origin=ORIGINAL if origin == 0 else AUGMENTED),
                item.src_text,
                item.trg_text,
            )
            groups.setdefault((meta.pattern_id, bucket), ([], []))[origin].append(tagged)

    order = {pid: i for i, pid in enumerate(pattern_order or [])}
    bucket_rank = {label: i for i, label in enumerate(BUCKET_LABELS)}
    assembled: List[TestItem] = []
    for (pid, bucket) in sorted(groups, key=lambda k: (order.get(k[0], len(order)), k[0], bucket_rank[k[1]])):
        kept_originals, pool = groups[(pid, bucket)]
        chosen = kept_originals[:cap]
        chosen += sorted(pool, key=_sort_key)[:cap - len(chosen)]
        assembled.extend(chosen)
        originals_kept = min(len(kept_originals), cap)
        logger.debug(
            "Bucket filled",
            pattern_id=pid,
            bucket=bucket,
            originals=originals_kept,
            augmented=len(chosen) - originals_kept,
        )
        if len(chosen) < cap:
            logger.warning(
                "Bucket under cap",
                pattern_id=pid,
                bucket=bucket,
                filled=len(chosen),
                shortfall=cap - len(chosen),
            )

    filled_buckets: Dict[str, set] = {}
    for pid, bucket in groups:
        filled_buckets.setdefault(pid, set()).add(bucket)
    for pid in pattern_order or []:
        empty = [label for label in BUCKET_LABELS if label not in filled_buckets.get(pid, ())]
        if empty:
            logger.warning("Buckets without items", pattern_id=pid, buckets=empty, shortfall=cap * len(empty))

    return [
        TestItem(replace(item.meta, line_no=line_no), item.src_text, item.trg_text)
        for line_no, item in enumerate(assembled, start=1)
    ]
