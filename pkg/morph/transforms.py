"""String rewriting for the five phenomena, surface and abstract variants."""

import difflib
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from morph.corpus_io import AnnotatedSentence, AnnotatedSentencePair, render
from morph.matcher import MatchSite, PatternPair
from morph.morphemes import MorphemeInventory
from utils.constants import VOWELS, CheckKind, Phenomenon, Side, Slot, Variant
from utils.text_helpers import last_two_vowels, vowel_positions


@dataclass(frozen=True)
class ExpectedOutcome:
    check_kind: CheckKind
    check_side: Side = Side.TARGET
    morpheme_parts: Tuple[str, ...] = ()
    triple: Optional[Tuple[str, str, str]] = None


@dataclass(frozen=True)
class ModifiedPairRecord:
    pair_id: int
    pattern_id: str
    variant: Variant
    src_text: str
    trg_text: str
    base_src: str
    base_trg: str
    expected: ExpectedOutcome
    base_lemma: str = ""


@dataclass(frozen=True)
class SideDiff:
    kind: str  # unchanged | substitution | insertion | rewrite
    removed: Tuple[str, ...] = ()
    added: Tuple[str, ...] = ()


def compound_form(base: str, morpheme: str) -> str:
    """Capitalised bound morpheme followed by the lowercased noun."""
    return morpheme[:1].upper() + morpheme[1:] + base.lower()


def apply_circumfix(base: str, pre: str, suf: str, side: Side = Side.TARGET) -> str:
    """pre + base + suf; on the source side the base loses its capital to the prefix."""
    core = base.lower() if side is Side.SOURCE else base
    return pre + core + suf


def apply_infix(base: str, infix: str, vowels: str = VOWELS) -> Optional[str]:
    """Insert before the first vowel that is not word-initial; None without one."""
    inner = [p for p in vowel_positions(base, vowels) if p > 0]
    if not inner:
        return None
    at = inner[0]
    return base[:at] + infix + base[at:]


def apply_vowel_harmony(base: str, triple: Sequence[str], vowels: str = VOWELS) -> Optional[str]:
    """c1 v1 c2 v2 c3 with v1, v2 the last two vowels of base."""
    found = last_two_vowels(base, vowels)
    if found is None:
        return None
    c1, c2, c3 = triple
    v1, v2 = found
    return f"{c1}{v1}{c2}{v2}{c3}"


def reduplicant(base: str, vowels: str = VOWELS) -> Optional[str]:
    """Prefix of base up to and including its first vowel (second one for vowel-initial bases)."""
    positions = vowel_positions(base, vowels)
    if not positions:
        return None
    if positions[0] == 0:
        if len(positions) < 2:
            return None
        return base[:positions[1] + 1]
    return base[:positions[0] + 1]


def apply_reduplication(base: str, mode: Phenomenon, vowels: str = VOWELS) -> Optional[str]:
    if not base:
        return None
    if mode is Phenomenon.REDUP_FULL:
        return base + base
    prefix = reduplicant(base, vowels)
    if prefix is None:
        return None
    if mode is Phenomenon.REDUP_TRIPLE:
        return prefix + prefix + base
    return prefix + base


def apply_isolated(sentence: AnnotatedSentence, trigger_idx: int, morpheme: str) -> AnnotatedSentence:
    """Replace the trigger token's form with the isolated morpheme."""
    return sentence.replace_token(trigger_idx, morpheme, lemma=morpheme)


def _rewrite(
    forms: Sequence[str],
    replace: Optional[Dict[int, str]] = None,
    delete: Iterable[int] = (),
    insert_before: Optional[Dict[int, List[str]]] = None,
    insert_after: Optional[Dict[int, List[str]]] = None,
) -> List[str]:
    replace = replace or {}
    insert_before = insert_before or {}
    insert_after = insert_after or {}
    delete = set(delete)
    out: List[str] = []
    for i, form in enumerate(forms):
        out.extend(insert_before.get(i, ()))
        if i not in delete:
            out.append(replace.get(i, form))
        out.extend(insert_after.get(i, ()))
    return out


def _trigger_span(site: MatchSite, side: Side) -> Tuple[int, ...]:
    trigger = site.trigger_idx(side)
    return () if trigger is None else site.extra(side) + (trigger,)


def _isolated_side(site: MatchSite, forms: Sequence[str], side: Side, morpheme: str) -> List[str]:
    """Trigger (or, for compounds, the slot before the base) becomes the isolated morpheme."""
    trigger = site.trigger_idx(side)
    if trigger is None:
        return _rewrite(forms, insert_before={site.base_idx(side): [morpheme]})
    return _rewrite(forms, replace={trigger: morpheme}, delete=site.extra(side))


def _surface_side(
    site: MatchSite,
    forms: Sequence[str],
    side: Side,
    pattern: PatternPair,
    inventory: MorphemeInventory,
    vowels: str,
) -> Optional[Tuple[List[str], ExpectedOutcome]]:
    """Realise the phenomenon on the base; None when the string rule does not apply."""
    pid = pattern.id
    base_idx = site.base_idx(side)
    base = forms[base_idx]
    delete = _trigger_span(site, side)
    phen = pattern.phenomenon

    if phen is Phenomenon.COMPOUND:
        bound = inventory.surface_of(pid, Variant.SURFACE, Slot.BOUND1)
        return _rewrite(forms, replace={base_idx: compound_form(base, bound)}), None

    if phen is Phenomenon.CIRCUMFIX:
        pre, suf = inventory.bound(pid)
        word = apply_circumfix(base, pre, suf, side)
        expected = ExpectedOutcome(CheckKind.CIRCUMFIXED_TOKEN, morpheme_parts=(pre, suf))
        return _rewrite(forms, replace={base_idx: word}, delete=delete), expected

    if phen is Phenomenon.INFIX:
        infix = inventory.surface_of(pid, Variant.SURFACE, Slot.BOUND1)
        word = apply_infix(base, infix, vowels)
        if word is None:
            return None
        expected = ExpectedOutcome(CheckKind.INFIXED_TOKEN, morpheme_parts=(infix,))
        return _rewrite(forms, replace={base_idx: word}, delete=delete), expected

    if phen is Phenomenon.VOWEL_HARMONY:
        triple = inventory.triple(pid)
        token = apply_vowel_harmony(base, triple, vowels)
        if token is None:
            return None
        expected = ExpectedOutcome(CheckKind.HARMONY_TOKEN, triple=tuple(triple))
        return _rewrite(forms, delete=delete, insert_after={base_idx: [token]}), expected

    word = apply_reduplication(base, phen, vowels)
    if word is None:
        return None
    expected = ExpectedOutcome(CheckKind.FULL_REDUP_TOKEN) if phen is Phenomenon.REDUP_FULL else None
    return _rewrite(forms, replace={base_idx: word}, delete=delete), expected


def _forms(pair: AnnotatedSentencePair, side: Side) -> List[str]:
    return pair.src.forms if side is Side.SOURCE else pair.trg.forms


def _record(
    site: MatchSite,
    pair: AnnotatedSentencePair,
    variant: Variant,
    rewritten: Dict[Side, List[str]],
    expected: ExpectedOutcome,
) -> ModifiedPairRecord:
    return ModifiedPairRecord(
        pair_id=pair.pair_id,
        pattern_id=site.pattern_id,
        variant=variant,
        src_text=render(rewritten[Side.SOURCE]),
        trg_text=render(rewritten[Side.TARGET]),
        base_src=pair.src.token_at(site.src_base_idx).form,
        base_trg=pair.trg.token_at(site.trg_base_idx).form,
        expected=expected,
        base_lemma=pair.src.token_at(site.src_base_idx).lemma_key,
    )


def apply_abstract(
    site: MatchSite, pair: AnnotatedSentencePair, pattern: PatternPair, inventory: MorphemeInventory
) -> ModifiedPairRecord:
    """Abstract token after the base on the phenomenon side, abstract-isolated morpheme on the other."""
    side = pattern.surface_side
    token = inventory.abstract_token(pattern.id)
    isolated = inventory.isolated(pattern.id, Variant.ABSTRACT)

    phen_forms = _rewrite(
        _forms(pair, side),
        delete=_trigger_span(site, side),
        insert_after={site.base_idx(side): [token]},
    )
    other_forms = _isolated_side(site, _forms(pair, side.other), side.other, isolated)

    if side is Side.TARGET:
        expected = ExpectedOutcome(CheckKind.ABSTRACT_TOKEN, morpheme_parts=(token,))
    else:
        expected = ExpectedOutcome(CheckKind.ISOLATED_TOKEN, morpheme_parts=(isolated,))
    return _record(site, pair, Variant.ABSTRACT, {side: phen_forms, side.other: other_forms}, expected)


def transform_site(
    site: MatchSite,
    pair: AnnotatedSentencePair,
    pattern: PatternPair,
    inventory: MorphemeInventory,
    variant: Variant,
    vowels: str = VOWELS,
) -> Optional[ModifiedPairRecord]:
    """Rewrite one matched pair; None when the surface rule is inapplicable."""
    if variant is Variant.ABSTRACT:
        return apply_abstract(site, pair, pattern, inventory)

    side = pattern.surface_side
    realised = _surface_side(site, _forms(pair, side), side, pattern, inventory, vowels)
    if realised is None:
        return None
    phen_forms, kind_expected = realised

    isolated = inventory.isolated(pattern.id, Variant.SURFACE)
    other_forms = _isolated_side(site, _forms(pair, side.other), side.other, isolated)

    if side is Side.TARGET:
        expected = kind_expected
    else:
        expected = ExpectedOutcome(CheckKind.ISOLATED_TOKEN, morpheme_parts=(isolated,))
    return _record(site, pair, Variant.SURFACE, {side: phen_forms, side.other: other_forms}, expected)


def apply_compound(
    site: MatchSite,
    pair: AnnotatedSentencePair,
    pattern: PatternPair,
    inventory: MorphemeInventory,
    variant: Variant = Variant.SURFACE,
) -> ModifiedPairRecord:
    """Compound rewriting of a random-noun site: bound morpheme on the noun, isolated one before its translation."""
    if not pattern.is_compound:
        raise ValueError(f"{pattern.id} is not a compound pattern")
    return transform_site(site, pair, pattern, inventory, variant)


def one_side_diff(record: ModifiedPairRecord, pair: AnnotatedSentencePair) -> Dict[Side, SideDiff]:
    """How each side of a record differs from the original pair."""
    diffs = {}
    for side, text in ((Side.SOURCE, record.src_text), (Side.TARGET, record.trg_text)):
        original = _forms(pair, side)
        new = text.split()
        changes = [op for op in difflib.SequenceMatcher(a=original, b=new, autojunk=False).get_opcodes()
                   if op[0] != "equal"]
        if not changes:
            diffs[side] = SideDiff("unchanged")
            continue
        removed = tuple(tok for _, i1, i2, _, _ in changes for tok in original[i1:i2])
        added = tuple(tok for _, _, _, j1, j2 in changes for tok in new[j1:j2])
        if len(changes) == 1 and len(added) == 1:
            kind = "substitution" if removed else "insertion"
        else:
            kind = "rewrite"
        diffs[side] = SideDiff(kind, removed, added)
    return diffs
