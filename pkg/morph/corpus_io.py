"""CoNLL-U and Pharaoh alignment reading, sentence-pair model, plain-text rendering."""

import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, TextIO, Tuple, Union

import conllu

from utils.exceptions import (
    AlignmentParseError,
    AlignmentRangeError,
    ConlluParseError,
    CorpusStructureError,
    CountMismatchError,
)
from utils.logger import get_logger

logger = get_logger('corpus_io')

CONLLU_COLUMNS = 10
_INT_ID = re.compile(r"^\d+$")
_RANGE_ID = re.compile(r"^\d+-\d+$")
_EMPTY_NODE_ID = re.compile(r"^\d+\.\d+$")

Alignment = FrozenSet[Tuple[int, int]]


@dataclass(frozen=True)
class Token:
    index: int
    form: str
    lemma: str
    upos: str
    head: int
    deprel: str

    @property
    def lemma_key(self) -> str:
        """Lowercased lemma, falling back to the form when the lemma is missing."""
        lemma = self.lemma if self.lemma not in ("", "_") else self.form
        return lemma.lower()


@dataclass(frozen=True)
class AnnotatedSentence:
    tokens: Tuple[Token, ...] = ()

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def forms(self) -> List[str]:
        return [tok.form for tok in self.tokens]

    def token_at(self, pos: int) -> Token:
        """Token at 0-based position pos."""
        return self.tokens[pos]

    def head_pos(self, pos: int) -> Optional[int]:
        """0-based position of the head of the token at pos; None for the root."""
        head = self.tokens[pos].head
        return head - 1 if head > 0 else None

    def dependents(self, pos: int) -> List[int]:
        index = pos + 1
        return [i for i, tok in enumerate(self.tokens) if tok.head == index]

    def validate(self, first_line: int = 0) -> None:
        """Check contiguous indices, head ranges and the single root."""
        n = len(self.tokens)
        for expected, tok in enumerate(self.tokens, start=1):
            if tok.index != expected:
                raise CorpusStructureError(
                    f"non-contiguous token indices near line {first_line}: expected {expected}, got {tok.index}",
                    line_no=first_line,
                )
            if not tok.form or any(ch.isspace() for ch in tok.form):
                raise CorpusStructureError(
                    f"token {tok.index} has an empty or whitespace form near line {first_line}",
                    line_no=first_line,
                )
            if not 0 <= tok.head <= n:
                raise CorpusStructureError(
                    f"token {tok.index} has head {tok.head} outside 0..{n} near line {first_line}",
                    line_no=first_line,
                )
        roots = sum(1 for tok in self.tokens if tok.head == 0)
        if n and roots != 1:
            raise CorpusStructureError(
                f"sentence near line {first_line} has {roots} roots, expected exactly one",
                line_no=first_line,
            )

    def replace_token(self, pos: int, form: str, lemma: Optional[str] = None) -> "AnnotatedSentence":
        tokens = list(self.tokens)
        tokens[pos] = replace(tokens[pos], form=form, lemma=lemma if lemma is not None else tokens[pos].lemma)
        return AnnotatedSentence(tuple(tokens))

    def insert_tokens(self, pos: int, new_tokens: Sequence[Token]) -> "AnnotatedSentence":
        """Insert tokens before 0-based position pos, re-indexing ids and heads.

        Heads of the inserted tokens are interpreted in the *original* numbering.
        """
        k = len(new_tokens)

        def shift(index: int) -> int:
            return index + k if index > pos else index

        shifted = [
            replace(tok, index=shift(tok.index), head=shift(tok.head) if tok.head else 0)
            for tok in self.tokens
        ]
        inserted = [
            replace(tok, index=pos + 1 + i, head=shift(tok.head) if tok.head else 0)
            for i, tok in enumerate(new_tokens)
        ]
        return AnnotatedSentence(tuple(shifted[:pos] + inserted + shifted[pos:]))


@dataclass(frozen=True)
class AnnotatedSentencePair:
    pair_id: int
    src: AnnotatedSentence
    trg: AnnotatedSentence
    alignment: Alignment = field(default_factory=frozenset)

    @cached_property
    def src_links(self) -> Dict[int, FrozenSet[int]]:
        links: Dict[int, set] = {}
        for s, t in self.alignment:
            links.setdefault(s, set()).add(t)
        return {k: frozenset(v) for k, v in links.items()}

    @cached_property
    def trg_links(self) -> Dict[int, FrozenSet[int]]:
        links: Dict[int, set] = {}
        for s, t in self.alignment:
            links.setdefault(t, set()).add(s)
        return {k: frozenset(v) for k, v in links.items()}

    def aligned_targets(self, src_pos: int) -> List[int]:
        return sorted(self.src_links.get(src_pos, ()))

    def is_aligned(self, src_pos: int, trg_pos: int) -> bool:
        return (src_pos, trg_pos) in self.alignment

    def is_one_to_one(self, src_pos: int, trg_pos: int) -> bool:
        return (
            self.src_links.get(src_pos) == frozenset({trg_pos})
            and self.trg_links.get(trg_pos) == frozenset({src_pos})
        )

    def validate_alignment(self) -> None:
        n_src, n_trg = len(self.src), len(self.trg)
        for s, t in sorted(self.alignment):
            if not (0 <= s < n_src and 0 <= t < n_trg):
                raise AlignmentRangeError(
                    f"alignment {s}-{t} out of range for pair {self.pair_id} "
                    f"({n_src} source / {n_trg} target tokens)",
                    pair_id=self.pair_id,
                    link=f"{s}-{t}",
                )

    def with_sentences(
        self,
        src: AnnotatedSentence,
        trg: AnnotatedSentence,
        alignment: Iterable[Tuple[int, int]],
    ) -> "AnnotatedSentencePair":
        return AnnotatedSentencePair(self.pair_id, src, trg, frozenset(alignment))


def _iter_blocks(lines: Iterable[str]) -> Iterator[Tuple[int, List[Tuple[int, str]]]]:
    """Yield (first line number, [(line number, line)]) per blank-line separated block."""
    block: List[Tuple[int, str]] = []
    for line_no, line in enumerate(lines, start=1):
        line = line.rstrip("\r\n")
        if line.strip():
            block.append((line_no, line))
        elif block:
            yield block[0][0], block
            block = []
    if block:
        yield block[0][0], block


def _check_row(line_no: int, line: str) -> Optional[List[str]]:
    """Validate one token row; returns its columns, or None for ranges and empty nodes."""
    columns = line.split("\t")
    if len(columns) != CONLLU_COLUMNS:
        raise ConlluParseError(
            f"line {line_no}: expected {CONLLU_COLUMNS} tab-separated columns, got {len(columns)}",
            line_no=line_no,
        )
    token_id = columns[0]
    if _RANGE_ID.match(token_id) or _EMPTY_NODE_ID.match(token_id):
        return None
    if not _INT_ID.match(token_id):
        raise ConlluParseError(f"line {line_no}: non-numeric ID {token_id!r}", line_no=line_no)
    if not _INT_ID.match(columns[6]):
        raise ConlluParseError(f"line {line_no}: non-numeric HEAD {columns[6]!r}", line_no=line_no)
    return columns


def _sentence_from_block(first_line: int, block: List[Tuple[int, str]]) -> AnnotatedSentence:
    rows = []
    for line_no, line in block:
        if line.startswith("#"):
            continue
        if _check_row(line_no, line) is not None:
            rows.append(line)

    if not rows:
        return AnnotatedSentence()

    # conllu does the field typing; ranges and empty nodes were already dropped
    token_list = conllu.parse("\n".join(rows) + "\n\n")[0]
    tokens = tuple(
        Token(
            index=int(tok["id"]),
            form=tok["form"],
            lemma=tok["lemma"] or "_",
            upos=tok["upos"] or "_",
            head=int(tok["head"]),
            deprel=tok["deprel"] or "_",
        )
        for tok in token_list
    )
    sentence = AnnotatedSentence(tokens)
    sentence.validate(first_line)
    return sentence


def iter_conllu(text: Union[str, TextIO]) -> Iterator[AnnotatedSentence]:
    lines = text.splitlines() if isinstance(text, str) else text
    for first_line, block in _iter_blocks(lines):
        # document and paragraph headers (# newdoc, # newpar) may stand in a block of their own
        if all(line.startswith("#") for _, line in block):
            continue
        yield _sentence_from_block(first_line, block)


def parse_conllu(text: Union[str, TextIO]) -> List[AnnotatedSentence]:
    """Parse CoNLL-U text (string or open stream) into sentences."""
    return list(iter_conllu(text))


def serialize_conllu(sentences: Iterable[AnnotatedSentence]) -> str:
    blocks = []
    for sentence in sentences:
        rows = [
            "\t".join((str(tok.index), tok.form, tok.lemma, tok.upos, "_", "_",
                       str(tok.head), tok.deprel, "_", "_"))
            for tok in sentence.tokens
        ]
        blocks.append("\n".join(rows) + "\n")
    return "\n".join(blocks)


def parse_alignment_line(line: str) -> FrozenSet[Tuple[int, int]]:
    """Parse a Pharaoh line of space-separated 0-based i-j links."""
    links = set()
    for item in line.split():
        src, sep, trg = item.partition("-")
        if not sep or not src.isdigit() or not trg.isdigit():
            raise AlignmentParseError(f"malformed alignment link {item!r}", link=item)
        links.add((int(src), int(trg)))
    return frozenset(links)


def read_alignments(path: Path) -> List[FrozenSet[Tuple[int, int]]]:
    alignments = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            try:
                alignments.append(parse_alignment_line(line))
            except AlignmentParseError as e:
                raise AlignmentParseError(
                    f"{path}:{line_no}: {e.message}", line_no=line_no, **e.context
                ) from e
    return alignments


def read_conllu_file(path: Path) -> List[AnnotatedSentence]:
    with open(path, encoding="utf-8") as f:
        return parse_conllu(f)


def load_parallel(src_conllu: Path, trg_conllu: Path, align_file: Path) -> List[AnnotatedSentencePair]:
    """Zip source parses, target parses and alignments; pair_id is the 0-based line number."""
    src = read_conllu_file(src_conllu)
    trg = read_conllu_file(trg_conllu)
    alignments = read_alignments(align_file)

    if not len(src) == len(trg) == len(alignments):
        raise CountMismatchError(
            f"parallel inputs differ in length: {len(src)} source sentences, "
            f"{len(trg)} target sentences, {len(alignments)} alignment lines",
            src_count=len(src),
            trg_count=len(trg),
            align_count=len(alignments),
        )

    pairs = []
    for pair_id, (s, t, a) in enumerate(zip(src, trg, alignments)):
        pair = AnnotatedSentencePair(pair_id, s, t, a)
        pair.validate_alignment()
        pairs.append(pair)

    logger.info("Parallel corpus loaded", pairs=len(pairs), src=str(src_conllu))
    return pairs


def render(sentence: Union[AnnotatedSentence, Sequence[str]]) -> str:
    """Space-join token forms."""
    forms = sentence.forms if isinstance(sentence, AnnotatedSentence) else list(sentence)
    if not forms:
        logger.warning("Rendering empty sentence")
        return ""
    return " ".join(forms)


def corpus_token_types(pairs: Iterable[AnnotatedSentencePair]) -> FrozenSet[str]:
    types = set()
    for pair in pairs:
        types.update(pair.src.forms)
        types.update(pair.trg.forms)
    return frozenset(types)


def read_wordlist(path: Path) -> FrozenSet[str]:
    """One entry per line; blank lines ignored."""
    with open(path, encoding="utf-8") as f:
        return frozenset(line.strip() for line in f if line.strip())
