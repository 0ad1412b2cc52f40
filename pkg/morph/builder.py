"""Corpus-wide dataset generation, manifest bookkeeping and build validation."""

import csv
import hashlib
import random
from collections import Counter
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from morph.corpus_io import AnnotatedSentencePair, render
from morph.matcher import MatchSite, PatternPair, scan_corpus
from morph.morphemes import MorphemeInventory, overlapping_morphemes
from morph.transforms import ExpectedOutcome, ModifiedPairRecord, transform_site
from utils.constants import (
    BUCKETS,
    MANIFEST_FILE,
    OVERFLOW_BUCKET,
    TRAIN_SRC,
    TRAIN_TRG,
    TRG_VOCAB_FILE,
    VOWELS,
    CheckKind,
    Phenomenon,
    Side,
    Slot,
    Variant,
)
from utils.exceptions import ConfigurationError, InventoryMismatchError
from utils.logger import get_logger
from utils.workers import ordered_map

logger = get_logger('builder')

MANIFEST_COLUMNS = ("pattern_id", "variant", "train_count", "test_count", "skipped_count")
BASE_FREQ_COLUMNS = ("pattern_id", "base_lemma", "freq")
META_COLUMNS = (
    "line_no", "pattern_id", "variant", "check_kind", "morpheme_parts", "triple",
    "base_src", "base_trg", "base_train_freq", "pair_id", "base_lemma",
)
AUG_META_COLUMNS = META_COLUMNS + ("bucket", "origin", "score", "item_id")


@dataclass
class BuildConfig:
    seed: int
    caps: Dict[str, int] = field(default_factory=dict)
    enable_surface: bool = True
    enable_abstract: bool = True
    test_fraction: float = 0.0
    threads: int = 1
    vowels: str = VOWELS

    @property
    def variants(self) -> Tuple[Variant, ...]:
        enabled = []
        if self.enable_surface:
            enabled.append(Variant.SURFACE)
        if self.enable_abstract:
            enabled.append(Variant.ABSTRACT)
        return tuple(enabled)


@dataclass
class Manifest:
    counts: Dict[Tuple[str, Variant], Dict[str, int]] = field(default_factory=dict)
    base_freqs: Dict[Tuple[str, str], int] = field(default_factory=dict)
    seed: Optional[int] = None
    digest: str = ""

    def pattern_ids(self) -> List[str]:
        seen: List[str] = []
        for pid, _ in self.counts:
            if pid not in seen:
                seen.append(pid)
        return seen

    def get(self, pattern_id: str, variant: Variant, column: str) -> int:
        return self.counts.get((pattern_id, variant), {}).get(column, 0)

    def train_count(self, pattern_id: str, variant: Variant = Variant.SURFACE) -> int:
        return self.get(pattern_id, variant, "train_count")

    def test_count(self, pattern_id: str, variant: Variant = Variant.SURFACE) -> int:
        return self.get(pattern_id, variant, "test_count")

    def skipped_count(self, pattern_id: str) -> int:
        return self.get(pattern_id, Variant.SURFACE, "skipped_count")

    def to_tsv(self) -> str:
        lines = [f"# seed={self.seed} digest={self.digest}", "\t".join(MANIFEST_COLUMNS)]
        for (pid, variant), row in self.counts.items():
            lines.append("\t".join([pid, variant.value] + [str(row[c]) for c in MANIFEST_COLUMNS[2:]]))
        lines.append("")
        lines.append("\t".join(BASE_FREQ_COLUMNS))
        for (pid, lemma), freq in sorted(self.base_freqs.items()):
            lines.append(f"{pid}\t{lemma}\t{freq}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class TestMetaRow:
    line_no: int
    pattern_id: str
    variant: Variant
    check_kind: CheckKind
    morpheme_parts: Tuple[str, ...]
    triple: Optional[Tuple[str, str, str]]
    base_src: str
    base_trg: str
    base_train_freq: int
    pair_id: int = -1
    base_lemma: str = ""
    bucket: Optional[str] = None
    origin: Optional[str] = None
    score: Optional[float] = None
    item_id: Optional[str] = None

    @property
    def expected(self) -> ExpectedOutcome:
        return ExpectedOutcome(self.check_kind, Side.TARGET, self.morpheme_parts, self.triple)

    def as_row(self, columns: Sequence[str] = META_COLUMNS) -> List[str]:
        values = {
            "line_no": str(self.line_no),
            "pattern_id": self.pattern_id,
            "variant": self.variant.value,
            "check_kind": self.check_kind.value,
            "morpheme_parts": ",".join(self.morpheme_parts),
            "triple": "".join(self.triple) if self.triple else "",
            "base_src": self.base_src,
            "base_trg": self.base_trg,
            "base_train_freq": str(self.base_train_freq),
            "pair_id": str(self.pair_id),
            "base_lemma": self.base_lemma,
            "bucket": self.bucket or "",
            "origin": self.origin or "",
            "score": "" if self.score is None else f"{self.score:.4f}",
            "item_id": self.item_id or "",
        }
        return [values[c] for c in columns]


@dataclass(frozen=True)
class TestItem:
    meta: TestMetaRow
    src_text: str
    trg_text: str


@dataclass
class BuildResult:
    train_src: List[str]
    train_trg: List[str]
    test: Dict[Variant, List[TestItem]]
    manifest: Manifest
    originals: int = 0
    trg_vocab: List[str] = field(default_factory=list)


@dataclass
class RecountResult:
    counts: Dict[Tuple[str, Variant], int] = field(default_factory=dict)
    conflicts: List[int] = field(default_factory=list)


def bucket_of(freq: int) -> str:
    """Frequency bucket label of a base's training frequency."""
    if freq < 0:
        raise ValueError(f"frequency must be >= 0, got {freq}")
    for label, low, high in BUCKETS:
        if low <= freq <= high:
            return label
    return OVERFLOW_BUCKET


def base_frequency(manifest: Manifest, pattern_id: str, base_lemma: str) -> int:
    return manifest.base_freqs.get((pattern_id, base_lemma.lower()), 0)


def is_held_out(pair_id: int, seed, fraction: float) -> bool:
    """Stable test-split membership derived from the pair id and seed."""
    if fraction <= 0:
        return False
    digest = hashlib.sha256(f"{seed}:split:{pair_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2 ** 64 < fraction


def config_digest(patterns: Sequence[PatternPair], inventory: MorphemeInventory, config: BuildConfig) -> str:
    h = hashlib.sha256()
    for p in patterns:
        h.update(repr((p.id, p.phenomenon.value, p.surface_side.value, sorted(p.src_lemmas),
                       sorted(p.trg_lemmas), p.base_selector.value, p.max_train_insertions,
                       p.max_test_insertions, p.trigger_repeat)).encode("utf-8"))
    for pid, variant, slot, morpheme in inventory.morphemes():
        h.update(f"{pid}/{variant.value}/{slot.value}={morpheme.surface}".encode("utf-8"))
    h.update(repr((config.seed, sorted(config.caps.items()), config.variants, config.test_fraction,
                   config.vowels)).encode("utf-8"))
    return h.hexdigest()[:16]


def check_inventory_covers(inventory: MorphemeInventory, patterns: Sequence[PatternPair]) -> None:
    missing = [p.id for p in patterns if not inventory.covers(p.id)]
    if missing:
        raise InventoryMismatchError(
            f"inventory has no morphemes for patterns: {', '.join(missing)}", patterns=missing
        )
    broken = []
    for p in patterns:
        if p.phenomenon in (Phenomenon.COMPOUND, Phenomenon.INFIX):
            if inventory.get(p.id, Variant.SURFACE, Slot.BOUND1) is None:
                broken.append(p.id)
        elif p.phenomenon is Phenomenon.CIRCUMFIX and len(inventory.bound(p.id)) != 2:
            broken.append(p.id)
        elif p.phenomenon is Phenomenon.VOWEL_HARMONY and inventory.triple(p.id) is None:
            broken.append(p.id)
    if broken:
        raise InventoryMismatchError(
            f"inventory slots do not fit the phenomena of: {', '.join(broken)}", patterns=broken
        )
    overlaps = overlapping_morphemes(inventory)
    if overlaps:
        raise InventoryMismatchError(
            f"inventory morphemes overlap across patterns: {'; '.join(overlaps)}", overlaps=overlaps
        )


def _apply_caps(
    sites: List[MatchSite], patterns: Sequence[PatternPair], caps: Mapping[str, Optional[int]], seed, split: str
) -> List[MatchSite]:
    by_pattern: Dict[str, List[MatchSite]] = {p.id: [] for p in patterns}
    for site in sites:
        by_pattern[site.pattern_id].append(site)

    kept: List[MatchSite] = []
    for p in patterns:
        pool = by_pattern[p.id]
        cap = caps.get(p.id)
        if cap is not None and len(pool) > cap:
            pool = random.Random(f"{seed}:{split}:{p.id}").sample(pool, cap)
            logger.debug("Pattern capped", pattern_id=p.id, split=split, cap=cap)
        kept.extend(pool)
    kept.sort(key=lambda s: s.pair_id)
    return kept


def _transform_job(
    job: Tuple[MatchSite, AnnotatedSentencePair],
    patterns: Mapping[str, PatternPair],
    inventory: MorphemeInventory,
    variants: Tuple[Variant, ...],
    vowels: str,
) -> Optional[Dict[Variant, ModifiedPairRecord]]:
    """Both variants of a site, or None when the surface rule does not apply."""
    site, pair = job
    pattern = patterns[site.pattern_id]
    surface = transform_site(site, pair, pattern, inventory, Variant.SURFACE, vowels)
    if surface is None:
        return None
    records = {}
    for variant in variants:
        records[variant] = surface if variant is Variant.SURFACE else transform_site(
            site, pair, pattern, inventory, variant, vowels
        )
    return records


def _transform_sites(
    sites: List[MatchSite],
    pairs_by_id: Mapping[int, AnnotatedSentencePair],
    patterns: Sequence[PatternPair],
    inventory: MorphemeInventory,
    config: BuildConfig,
) -> Tuple[List[Dict[Variant, ModifiedPairRecord]], Counter]:
    job = partial(
        _transform_job,
        patterns={p.id: p for p in patterns},
        inventory=inventory,
        variants=config.variants,
        vowels=config.vowels,
    )
    results = ordered_map(job, [(site, pairs_by_id[site.pair_id]) for site in sites], config.threads)
    skipped: Counter = Counter()
    kept = []
    for site, records in zip(sites, results):
        if records is None:
            skipped[site.pattern_id] += 1
            logger.debug("Site skipped", pair_id=site.pair_id, pattern_id=site.pattern_id)
        else:
            kept.append(records)
    return kept, skipped


def record_meta(record: ModifiedPairRecord, line_no: int, base_train_freq: int) -> TestMetaRow:
    expected = record.expected
    return TestMetaRow(
        line_no=line_no,
        pattern_id=record.pattern_id,
        variant=record.variant,
        check_kind=expected.check_kind,
        morpheme_parts=tuple(expected.morpheme_parts),
        triple=tuple(expected.triple) if expected.triple else None,
        base_src=record.base_src,
        base_trg=record.base_trg,
        base_train_freq=base_train_freq,
        pair_id=record.pair_id,
        base_lemma=record.base_lemma,
    )


def build_dataset(
    pairs: Sequence[AnnotatedSentencePair],
    patterns: Sequence[PatternPair],
    inventory: MorphemeInventory,
    config: BuildConfig,
    test_pairs: Optional[Sequence[AnnotatedSentencePair]] = None,
) -> BuildResult:
    """Originals, then surface records, then abstract records; test records per variant."""
    check_inventory_covers(inventory, patterns)
    unknown_caps = set(config.caps) - {p.id for p in patterns}
    if unknown_caps:
        raise ConfigurationError(f"caps given for unknown patterns: {', '.join(sorted(unknown_caps))}")

    if test_pairs is None:
        train_pairs = [p for p in pairs if not is_held_out(p.pair_id, config.seed, config.test_fraction)]
        test_pairs = [p for p in pairs if is_held_out(p.pair_id, config.seed, config.test_fraction)]
    else:
        train_pairs = list(pairs)
        test_pairs = list(test_pairs)

    train_caps = {p.id: config.caps.get(p.id, p.max_train_insertions) for p in patterns}
    test_caps = {p.id: p.max_test_insertions for p in patterns}

    train_scan = scan_corpus(train_pairs, patterns, config.seed, config.threads)
    test_scan = scan_corpus(test_pairs, patterns, f"{config.seed}:test", config.threads)
    train_sites = _apply_caps(train_scan.sites, patterns, train_caps, config.seed, "train")
    test_sites = _apply_caps(test_scan.sites, patterns, test_caps, config.seed, "test")

    train_records, train_skipped = _transform_sites(
        train_sites, {p.pair_id: p for p in train_pairs}, patterns, inventory, config
    )
    test_records, test_skipped = _transform_sites(
        test_sites, {p.pair_id: p for p in test_pairs}, patterns, inventory, config
    )

    manifest = Manifest(seed=config.seed, digest=config_digest(patterns, inventory, config))
    for p in patterns:
        for variant in (Variant.SURFACE, Variant.ABSTRACT):
            manifest.counts[(p.id, variant)] = {
                "train_count": 0,
                "test_count": 0,
                "skipped_count": train_skipped[p.id] + test_skipped[p.id],
            }

    base_freqs: Counter = Counter()
    for records in train_records:
        first = next(iter(records.values()), None)
        if first is None:
            continue
        base_freqs[(first.pattern_id, first.base_lemma)] += 1
        for variant, record in records.items():
            manifest.counts[(record.pattern_id, variant)]["train_count"] += 1
    manifest.base_freqs = dict(base_freqs)

    train_src = [render(p.src) for p in train_pairs]
    train_trg = [render(p.trg) for p in train_pairs]
    originals = len(train_src)
    for variant in config.variants:
        for records in train_records:
            train_src.append(records[variant].src_text)
            train_trg.append(records[variant].trg_text)

    test: Dict[Variant, List[TestItem]] = {}
    for variant in config.variants:
        items = []
        for records in test_records:
            record = records[variant]
            freq = base_frequency(manifest, record.pattern_id, record.base_lemma)
            meta = record_meta(record, len(items) + 1, freq)
            items.append(TestItem(meta, record.src_text, record.trg_text))
            manifest.counts[(record.pattern_id, variant)]["test_count"] += 1
        test[variant] = items

    trg_vocab = sorted({tok.casefold() for line in train_trg[:originals] for tok in line.split()})
    logger.info(
        "Dataset built",
        train_pairs=len(train_pairs),
        test_pairs=len(test_pairs),
        train_lines=len(train_src),
        train_sites=len(train_records),
        test_sites=len(test_records),
        skipped=sum(train_skipped.values()) + sum(test_skipped.values()),
    )
    return BuildResult(train_src, train_trg, test, manifest, originals, trg_vocab)


def _signatures(
    inventory: MorphemeInventory, patterns: Sequence[PatternPair]
) -> Dict[Tuple[Side, str], Tuple[str, Variant]]:
    """Whole-token morpheme that marks each (pattern, variant) in a training line."""
    signatures = {}
    for p in patterns:
        side = p.surface_side
        signatures[(side.other, inventory.isolated(p.id, Variant.SURFACE))] = (p.id, Variant.SURFACE)
        signatures[(side, inventory.abstract_token(p.id))] = (p.id, Variant.ABSTRACT)
    return signatures


def recount_lines(
    src_lines: Iterable[str],
    trg_lines: Iterable[str],
    inventory: MorphemeInventory,
    patterns: Sequence[PatternPair],
) -> RecountResult:
    """Count training lines per (pattern, variant) from the morphemes they carry."""
    signatures = _signatures(inventory, patterns)
    result = RecountResult({(p.id, v): 0 for p in patterns for v in (Variant.SURFACE, Variant.ABSTRACT)})
    for line_no, (src, trg) in enumerate(zip(src_lines, trg_lines), start=1):
        found = set()
        for side, line in ((Side.SOURCE, src), (Side.TARGET, trg)):
            for tok in line.split():
                key = signatures.get((side, tok))
                if key is not None:
                    found.add(key)
        if len(found) > 1:
            result.conflicts.append(line_no)
        for key in found:
            result.counts[key] += 1
    return result


def recount_train(
    train_src: Path, train_trg: Path, inventory: MorphemeInventory, patterns: Sequence[PatternPair]
) -> RecountResult:
    with open(train_src, encoding="utf-8") as fs, open(train_trg, encoding="utf-8") as ft:
        return recount_lines(
            (line.rstrip("\n") for line in fs), (line.rstrip("\n") for line in ft), inventory, patterns
        )


def validate_build(manifest: Manifest, recount: RecountResult) -> List[str]:
    """Differences between manifest train counts and a recount of the emitted corpus."""
    problems = []
    for (pid, variant), row in manifest.counts.items():
        found = recount.counts.get((pid, variant), 0)
        if found != row["train_count"]:
            problems.append(f"{pid}/{variant.value}: manifest says {row['train_count']}, corpus has {found}")
    for pid in manifest.pattern_ids():
        freq_total = sum(f for (p, _), f in manifest.base_freqs.items() if p == pid)
        trained = max(manifest.train_count(pid, Variant.SURFACE), manifest.train_count(pid, Variant.ABSTRACT))
        if freq_total != trained:
            problems.append(f"{pid}: base frequencies sum to {freq_total}, expected {trained}")
    if recount.conflicts:
        problems.append(f"{len(recount.conflicts)} lines carry morphemes of more than one pattern "
                        f"(first at line {recount.conflicts[0]})")
    return problems


def _write_lines(path: Path, lines: Iterable[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for line in lines:
            f.write(line + "\n")


def write_test_set(out_dir: Path, prefix: str, variant: Variant, items: Sequence[TestItem],
                   columns: Sequence[str] = META_COLUMNS) -> None:
    _write_lines(out_dir / f"{prefix}.{variant.value}.src", (item.src_text for item in items))
    _write_lines(out_dir / f"{prefix}.{variant.value}.trg", (item.trg_text for item in items))
    with open(out_dir / f"{prefix}.{variant.value}.meta.tsv", "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, delimiter="\t", lineterminator="\n", quoting=csv.QUOTE_NONE, escapechar="\\")
        writer.writerow(columns)
        for item in items:
            writer.writerow(item.meta.as_row(columns))


def write_dataset(result: BuildResult, out_dir: Path) -> List[Path]:
    """Write corpora, test sets, manifest and target vocabulary; returns the paths written."""
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_lines(out_dir / TRAIN_SRC, result.train_src)
    _write_lines(out_dir / TRAIN_TRG, result.train_trg)
    written = [out_dir / TRAIN_SRC, out_dir / TRAIN_TRG]

    for variant, items in result.test.items():
        write_test_set(out_dir, "test", variant, items)
        written += [out_dir / f"test.{variant.value}.{ext}" for ext in ("src", "trg", "meta.tsv")]

    (out_dir / MANIFEST_FILE).write_text(result.manifest.to_tsv(), encoding="utf-8")
    _write_lines(out_dir / TRG_VOCAB_FILE, result.trg_vocab)
    written += [out_dir / MANIFEST_FILE, out_dir / TRG_VOCAB_FILE]
    logger.info("Dataset written", out_dir=str(out_dir), files=len(written))
    return written


def read_manifest(path: Path) -> Manifest:
    manifest = Manifest()
    table = None
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if line.startswith("#"):
                for item in line[1:].split():
                    key, _, value = item.partition("=")
                    if key == "seed":
                        manifest.seed = None if value in ("", "None") else int(value)
                    elif key == "digest":
                        manifest.digest = value
                continue
            if not line.strip():
                table = None
                continue
            cells = line.split("\t")
            if tuple(cells) == MANIFEST_COLUMNS:
                table = "counts"
            elif tuple(cells) == BASE_FREQ_COLUMNS:
                table = "freqs"
            elif table == "counts":
                pid, variant = cells[0], Variant(cells[1])
                manifest.counts[(pid, variant)] = {
                    c: int(v) for c, v in zip(MANIFEST_COLUMNS[2:], cells[2:])
                }
            elif table == "freqs":
                manifest.base_freqs[(cells[0], cells[1])] = int(cells[2])
            else:
                raise ConfigurationError(f"unexpected manifest line in {path}: {line!r}", path=str(path))
    return manifest


def read_test_meta(path: Path) -> List[TestMetaRow]:
    rows = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f, delimiter="\t", quoting=csv.QUOTE_NONE, escapechar="\\")
        for row in reader:
            parts = tuple(p for p in row["morpheme_parts"].split(",") if p)
            triple = tuple(row["triple"]) if row.get("triple") else None
            score = row.get("score")
            rows.append(TestMetaRow(
                line_no=int(row["line_no"]),
                pattern_id=row["pattern_id"],
                variant=Variant(row["variant"]),
                check_kind=CheckKind(row["check_kind"]),
                morpheme_parts=parts,
                triple=triple,
                base_src=row["base_src"],
                base_trg=row["base_trg"],
                base_train_freq=int(row["base_train_freq"]),
                pair_id=int(row.get("pair_id") or -1),
                base_lemma=row.get("base_lemma") or "",
                bucket=row.get("bucket") or None,
                origin=row.get("origin") or None,
                score=float(score) if score else None,
                item_id=row.get("item_id") or None,
            ))
    return rows


def read_lines(path: Path) -> List[str]:
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]
