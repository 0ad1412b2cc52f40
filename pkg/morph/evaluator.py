"""Scoring of system outputs: per-phenomenon checks, accuracy tables and error classification."""

import csv
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from morph.builder import Manifest, TestMetaRow, base_frequency, bucket_of
from morph.morphemes import MorphemeInventory
from utils.constants import (
    ABSTRACT_TOKEN_PATTERN,
    BUCKET_LABELS,
    BUCKETS_FILE,
    ERRORS_FILE,
    HEURISTIC_CODES,
    REPORT_FILE,
    VOWELS,
    CheckKind,
    ErrorCode,
    MorphemeRole,
    Side,
    Variant,
)
from utils.exceptions import LineCountMismatchError
from utils.logger import get_logger
from utils.text_helpers import last_two_vowels, matches_skeleton, normalize_tokens, normalized_levenshtein

logger = get_logger('evaluator')

_ABSTRACT_RE = re.compile(ABSTRACT_TOKEN_PATTERN, re.IGNORECASE)
NEEDS_HUMAN_CODES = frozenset({ErrorCode.S3, ErrorCode.T2, ErrorCode.T5})


def check_isolated(tokens: Sequence[str], morpheme: str) -> bool:
    return morpheme.casefold() in tokens


def check_circumfix(tokens: Sequence[str], pre: str, suf: str) -> bool:
    pre, suf = pre.casefold(), suf.casefold()
    return any(
        len(tok) > len(pre) + len(suf) and tok.startswith(pre) and tok.endswith(suf)
        for tok in tokens
    )


def _strictly_inside(token: str, part: str) -> bool:
    start = token.find(part, 1)
    while start != -1:
        if start + len(part) < len(token):
            return True
        start = token.find(part, start + 1)
    return False


def check_infix(tokens: Sequence[str], infix: str) -> bool:
    infix = infix.casefold()
    return any(_strictly_inside(tok, infix) for tok in tokens)


def check_vowel_harmony(tokens: Sequence[str], triple: Sequence[str], vowels: str = VOWELS) -> bool:
    """First skeleton token must follow a token whose last two vowels it carries."""
    for i, tok in enumerate(tokens):
        if matches_skeleton(tok, triple, vowels):
            if i == 0:
                return False
            return last_two_vowels(tokens[i - 1], vowels) == (tok[1], tok[3])
    return False


def check_full_redup(tokens: Sequence[str]) -> bool:
    for tok in tokens:
        half = len(tok) // 2
        if len(tok) >= 4 and len(tok) % 2 == 0 and tok[:half] == tok[half:]:
            return True
    return False


def check_abstract(tokens: Sequence[str], abstract_token: str) -> bool:
    return abstract_token.casefold() in tokens


def check_expected(tokens: Sequence[str], meta: TestMetaRow, vowels: str = VOWELS) -> bool:
    kind, parts = meta.check_kind, meta.morpheme_parts
    if kind is CheckKind.ISOLATED_TOKEN:
        return check_isolated(tokens, parts[0])
    if kind is CheckKind.CIRCUMFIXED_TOKEN:
        return check_circumfix(tokens, parts[0], parts[1])
    if kind is CheckKind.INFIXED_TOKEN:
        return check_infix(tokens, parts[0])
    if kind is CheckKind.HARMONY_TOKEN:
        return check_vowel_harmony(tokens, meta.triple, vowels)
    if kind is CheckKind.FULL_REDUP_TOKEN:
        return check_full_redup(tokens)
    return check_abstract(tokens, parts[0])


@dataclass(frozen=True)
class EvalRecord:
    line_no: int
    pattern_id: str
    variant: Variant
    correct: bool
    error_type: Optional[ErrorCode] = None
    confidence: Optional[str] = None
    needs_human: bool = False
    bucket: str = ""

    @property
    def verdict(self) -> str:
        return "correct" if self.correct else "incorrect"


@dataclass
class GroupStats:
    n: int = 0
    correct: int = 0

    @property
    def accuracy(self) -> float:
        return self.correct / self.n if self.n else 0.0

    def add(self, correct: bool) -> None:
        self.n += 1
        self.correct += int(correct)


@dataclass
class Report:
    records: List[EvalRecord] = field(default_factory=list)
    by_pattern: Dict[Tuple[str, Variant], GroupStats] = field(default_factory=dict)
    by_bucket: Dict[Tuple[str, Variant, str], GroupStats] = field(default_factory=dict)
    errors: Dict[str, Counter] = field(default_factory=dict)

    def accuracy(self, pattern_id: str, variant: Variant) -> float:
        return self.by_pattern[(pattern_id, variant)].accuracy

    @property
    def overall(self) -> GroupStats:
        total = GroupStats()
        for stats in self.by_pattern.values():
            total.n += stats.n
            total.correct += stats.correct
        return total


class ErrorClassifier:
    """Assigns one error code to each incorrect output line.

    Rules run in a fixed order and the first that fires wins; codes whose
    evidence is only orthographic or distributional are marked heuristic.
    """

    def __init__(
        self,
        inventory: MorphemeInventory,
        trg_vocab: Optional[Iterable[str]] = None,
        vowels: str = VOWELS,
        similarity_threshold: float = 0.34,
    ):
        self.inventory = inventory
        self.trg_vocab: Optional[FrozenSet[str]] = (
            frozenset(w.casefold() for w in trg_vocab) if trg_vocab is not None else None
        )
        self.vowels = vowels
        self.similarity_threshold = similarity_threshold
        # (pattern_id, casefolded surface, whole-token match) for every non-triple morpheme
        self._all_morphemes: List[Tuple[str, str, bool]] = [
            (pid, m.surface.casefold(), m.role is MorphemeRole.ABSTRACT_TOKEN)
            for pid, _, _, m in inventory.morphemes()
            if m.role is not MorphemeRole.CONSONANT_TRIPLE
        ]

    def _side_strings(self, pattern_id: str, variant: Variant, side: Side) -> List[str]:
        slots = self.inventory.assignments.get((pattern_id, variant), {})
        return [
            m.surface.casefold() for m in slots.values()
            if m.language_side is side and m.role is not MorphemeRole.CONSONANT_TRIPLE
        ]

    @staticmethod
    def _occurs(tokens: Sequence[str], part: str) -> bool:
        return any(part in tok for tok in tokens)

    def _foreign_morpheme(self, tokens: Sequence[str], pattern_id: str) -> bool:
        for pid, surface, whole in self._all_morphemes:
            if pid == pattern_id:
                continue
            if (surface in tokens) if whole else self._occurs(tokens, surface):
                return True
        return False

    def _repeated(self, tokens: Sequence[str], meta: TestMetaRow) -> bool:
        if meta.check_kind is CheckKind.HARMONY_TOKEN:
            return sum(matches_skeleton(tok, meta.triple, self.vowels) for tok in tokens) > 1
        for part in meta.morpheme_parts:
            part = part.casefold()
            if sum(tok.count(part) for tok in tokens) > 1:
                return True
        return False

    def _word_break(self, tokens: Sequence[str], meta: TestMetaRow) -> bool:
        kind, parts = meta.check_kind, [p.casefold() for p in meta.morpheme_parts]
        if kind is CheckKind.CIRCUMFIXED_TOKEN:
            pre, suf = parts
            return any(
                tokens[i] == pre and tokens[i + 2] == suf and tokens[i + 1]
                for i in range(len(tokens) - 2)
            )
        if kind is CheckKind.INFIXED_TOKEN:
            return any(
                tok == parts[0] and ((i > 0 and tokens[i - 1]) or (i + 1 < len(tokens) and tokens[i + 1]))
                for i, tok in enumerate(tokens)
            )
        if kind is CheckKind.FULL_REDUP_TOKEN:
            return any(
                len(tokens[i]) >= 2 and tokens[i] == tokens[i + 1] for i in range(len(tokens) - 1)
            )
        return False

    def _near_miss(self, tokens: Sequence[str], meta: TestMetaRow) -> bool:
        kind, parts = meta.check_kind, [p.casefold() for p in meta.morpheme_parts]
        if kind is CheckKind.HARMONY_TOKEN:
            return any(matches_skeleton(tok, meta.triple, self.vowels) for tok in tokens)
        if kind is CheckKind.CIRCUMFIXED_TOKEN:
            pre, suf = parts
            return any(
                (len(tok) > len(pre) and tok.startswith(pre)) != (len(tok) > len(suf) and tok.endswith(suf))
                for tok in tokens
            )
        if kind is CheckKind.INFIXED_TOKEN:
            infix = parts[0]
            return any(tok != infix and (tok.startswith(infix) or tok.endswith(infix)) for tok in tokens)
        if kind is CheckKind.ISOLATED_TOKEN:
            return any(tok != parts[0] and parts[0] in tok for tok in tokens)
        if kind is CheckKind.ABSTRACT_TOKEN:
            inner = parts[0].strip("@").casefold()
            return any(inner in tok for tok in tokens)
        return False

    def _similar_word(self, tokens: Sequence[str], meta: TestMetaRow) -> Optional[ErrorCode]:
        parts = [p.casefold() for p in meta.morpheme_parts]
        if meta.check_kind is CheckKind.CIRCUMFIXED_TOKEN:
            parts = ["".join(parts)]
        # pieces shorter than four letters are one edit away from common words
        source = [s for s in self._side_strings(meta.pattern_id, meta.variant, Side.SOURCE)
                  if len(s) >= 4 and not s.startswith("@")]
        target = [p for p in parts if len(p) >= 4 and not p.startswith("@")]

        def nearest(strings: Sequence[str]) -> float:
            return min(
                (normalized_levenshtein(tok, s) for tok in tokens if tok for s in strings),
                default=1.0,
            )

        d_src, d_trg = nearest(source), nearest(target)
        if min(d_src, d_trg) > self.similarity_threshold:
            return None
        return ErrorCode.T2 if d_trg <= d_src else ErrorCode.S3

    def _similar_concatenation(self, tokens: Sequence[str], meta: TestMetaRow) -> bool:
        reference = meta.base_trg.casefold()
        if not reference:
            return False
        for tok in tokens:
            if len(tok) <= len(reference) or not tok.endswith(reference):
                continue
            first = tok[:-len(reference)]
            if first == reference:
                continue
            if self.trg_vocab is not None:
                if first in self.trg_vocab:
                    return True
            elif first.isalpha() and len(first) >= 3:
                return True
        return False

    def classify(self, tokens: Sequence[str], meta: TestMetaRow) -> ErrorCode:
        if meta.variant is Variant.SURFACE and any(_ABSTRACT_RE.match(tok) for tok in tokens):
            return ErrorCode.A1
        if self._foreign_morpheme(tokens, meta.pattern_id):
            return ErrorCode.O1
        if self._repeated(tokens, meta):
            return ErrorCode.T3
        if self._word_break(tokens, meta):
            return ErrorCode.T4
        if self._near_miss(tokens, meta):
            return ErrorCode.T1

        source = self._side_strings(meta.pattern_id, meta.variant, Side.SOURCE)
        if any(self._occurs(tokens, s) for s in source):
            base = meta.base_src.casefold()
            if base and self._occurs(tokens, base):
                return ErrorCode.S1
            return ErrorCode.S2

        if meta.check_kind is CheckKind.FULL_REDUP_TOKEN and self._similar_concatenation(tokens, meta):
            return ErrorCode.T5
        similar = self._similar_word(tokens, meta)
        if similar is not None:
            return similar
        return ErrorCode.M1


def classify_error(
    meta: TestMetaRow,
    output: str,
    inventory: MorphemeInventory,
    trg_vocab: Optional[Iterable[str]] = None,
    vowels: str = VOWELS,
) -> ErrorCode:
    """Error code of one incorrect output line."""
    return ErrorClassifier(inventory, trg_vocab, vowels).classify(normalize_tokens(output), meta)


def evaluate(
    outputs: Sequence[str],
    meta: Sequence[TestMetaRow],
    inventory: MorphemeInventory,
    manifest: Optional[Manifest] = None,
    trg_vocab: Optional[Iterable[str]] = None,
    vowels: str = VOWELS,
    similarity_threshold: float = 0.34,
) -> Report:
    """Score line-parallel outputs against test metadata."""
    if len(outputs) != len(meta):
        raise LineCountMismatchError(
            f"system output has {len(outputs)} lines, test metadata has {len(meta)}",
            outputs=len(outputs),
            meta=len(meta),
        )

    classifier = ErrorClassifier(inventory, trg_vocab, vowels, similarity_threshold)
    report = Report()
    for line, row in zip(outputs, meta):
        tokens = normalize_tokens(line)
        freq = base_frequency(manifest, row.pattern_id, row.base_lemma) if manifest else row.base_train_freq
        bucket = row.bucket or bucket_of(freq)

        if check_expected(tokens, row, vowels):
            record = EvalRecord(row.line_no, row.pattern_id, row.variant, True, bucket=bucket)
        else:
            code = classifier.classify(tokens, row)
            record = EvalRecord(
                row.line_no,
                row.pattern_id,
                row.variant,
                False,
                error_type=code,
                confidence="heuristic" if code in HEURISTIC_CODES else "exact",
                needs_human=code in NEEDS_HUMAN_CODES,
                bucket=bucket,
            )
            report.errors.setdefault(row.pattern_id, Counter())[code] += 1

        report.records.append(record)
        report.by_pattern.setdefault((row.pattern_id, row.variant), GroupStats()).add(record.correct)
        report.by_bucket.setdefault((row.pattern_id, row.variant, bucket), GroupStats()).add(record.correct)

    overall = report.overall
    logger.info(
        "Outputs evaluated",
        lines=overall.n,
        accuracy=round(overall.accuracy, 4),
        errors=sum(sum(c.values()) for c in report.errors.values()),
    )
    return report


def write_report(report: Report, out_dir: Path) -> List[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / REPORT_FILE, out_dir / BUCKETS_FILE, out_dir / ERRORS_FILE]

    with open(paths[0], "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, delimiter="\t", lineterminator="\n")
        writer.writerow(("pattern_id", "variant", "n", "accuracy"))
        for (pid, variant), stats in report.by_pattern.items():
            writer.writerow((pid, variant.value, stats.n, f"{stats.accuracy:.4f}"))

    order = {label: i for i, label in enumerate(BUCKET_LABELS)}
    with open(paths[1], "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, delimiter="\t", lineterminator="\n")
        writer.writerow(("pattern_id", "variant", "bucket", "n", "accuracy"))
        for (pid, variant, bucket), stats in sorted(
            report.by_bucket.items(), key=lambda kv: (kv[0][0], kv[0][1].value, order.get(kv[0][2], len(order)))
        ):
            writer.writerow((pid, variant.value, bucket, stats.n, f"{stats.accuracy:.4f}"))

    with open(paths[2], "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, delimiter="\t", lineterminator="\n")
        writer.writerow(("line_no", "code", "confidence", "pattern_id", "variant", "needs_human"))
        for record in report.records:
            if record.correct:
                continue
            writer.writerow((
                record.line_no, record.error_type.value, record.confidence,
                record.pattern_id, record.variant.value, int(record.needs_human),
            ))

    logger.info("Report written", out_dir=str(out_dir))
    return paths

