from enum import Enum
from pathlib import Path


class Side(str, Enum):
    SOURCE = "source"
    TARGET = "target"

    @property
    def other(self) -> "Side":
        return Side.TARGET if self is Side.SOURCE else Side.SOURCE


class Variant(str, Enum):
    SURFACE = "surface"
    ABSTRACT = "abstract"


class Phenomenon(str, Enum):
    COMPOUND = "compound"
    CIRCUMFIX = "circumfix"
    INFIX = "infix"
    VOWEL_HARMONY = "vowel_harmony"
    REDUP_PARTIAL = "redup_partial"
    REDUP_TRIPLE = "redup_triple"
    REDUP_FULL = "redup_full"

    @property
    def is_reduplication(self) -> bool:
        return self in (Phenomenon.REDUP_PARTIAL, Phenomenon.REDUP_TRIPLE, Phenomenon.REDUP_FULL)


class BaseSelector(str, Enum):
    PREP_OBJECT = "prep_object"
    CARDINAL_HEAD = "cardinal_head"
    ADJECTIVE_AFTER_MODIFIER = "adjective_after_modifier"
    RANDOM_ALIGNED_NOUN = "random_aligned_noun"


class CheckKind(str, Enum):
    ISOLATED_TOKEN = "isolated_token"
    CIRCUMFIXED_TOKEN = "circumfixed_token"
    INFIXED_TOKEN = "infixed_token"
    HARMONY_TOKEN = "harmony_token"
    FULL_REDUP_TOKEN = "full_redup_token"
    ABSTRACT_TOKEN = "abstract_token"


class MorphemeRole(str, Enum):
    BOUND_PREFIX = "bound-prefix"
    BOUND_SUFFIX = "bound-suffix"
    BOUND_INFIX = "bound-infix"
    BOUND_COMPOUND = "bound-compound"
    CONSONANT_TRIPLE = "consonant-triple"
    ISOLATED = "isolated"
    ABSTRACT_TOKEN = "abstract-token"
    ABSTRACT_ISOLATED = "abstract-isolated"


class Slot(str, Enum):
    BOUND1 = "bound1"
    BOUND2 = "bound2"
    ISOLATED = "isolated"
    TRIPLE = "triple"
    ABSTRACT = "abstract"


class ErrorCode(str, Enum):
    M1 = "M1"  # no artificial morpheme in output
    S1 = "S1"  # source morpheme and base untranslated
    S2 = "S2"  # only source morpheme untranslated
    S3 = "S3"  # source morpheme -> orthographically similar word
    T1 = "T1"  # target morpheme not entirely correct
    T2 = "T2"  # target morpheme -> orthographically similar word
    T3 = "T3"  # target morpheme occurs multiple times
    T4 = "T4"  # word break between morpheme and base
    T5 = "T5"  # similar-word concatenation instead of reduplication
    O1 = "O1"  # other pattern's morpheme generated
    A1 = "A1"  # abstract instead of surface form


HEURISTIC_CODES = frozenset({ErrorCode.S1, ErrorCode.S3, ErrorCode.T2, ErrorCode.T5})

# Alphabets
CONSONANTS = "bcdfghjklmnpqrstvwxyz"
TARGET_VOWELS = "aeiou"
SOURCE_VOWELS = "aeiouäöü"
VOWELS = "aeiouäöü"

# Dependency labels: UD first, TIGER/spaCy-German second
CASE_RELS = frozenset({"case", "prep", "ac"})
PREP_OBJECT_RELS = frozenset({"pobj", "nk", "obj", "obl", "nmod"})
NUMMOD_RELS = frozenset({"nummod", "num", "nk"})
MODIFIER_RELS = frozenset({"advmod", "neg", "mo", "ng", "amod"})
MISSING_LABELS = frozenset({"", "_"})

TRIGGER_UPOS = {
    BaseSelector.PREP_OBJECT: frozenset({"ADP"}),
    BaseSelector.CARDINAL_HEAD: frozenset({"NUM"}),
    BaseSelector.ADJECTIVE_AFTER_MODIFIER: frozenset({"ADV", "PART"}),
    BaseSelector.RANDOM_ALIGNED_NOUN: frozenset(),
}

# Frequency buckets (lower bound inclusive, upper bound inclusive)
BUCKETS = (
    ("zero-shot", 0, 0),
    ("1-5", 1, 5),
    ("6-15", 6, 15),
    ("16-50", 16, 50),
    ("51-100", 51, 100),
    ("101-500", 101, 500),
    ("501-1000", 501, 1000),
)
OVERFLOW_BUCKET = ">1000"
BUCKET_LABELS = tuple(label for label, _, _ in BUCKETS) + (OVERFLOW_BUCKET,)

ABSTRACT_TOKEN_PATTERN = r"^@[A-Z]+(?:_[A-Z]+)*(?:_\d+)?@$"

BASE_DIR = Path(__file__).resolve().parent.parent
DEFAULT_PATTERNS_PATH = BASE_DIR / "config" / "patterns.tsv"

# Output file names
TRAIN_SRC = "train.src"
TRAIN_TRG = "train.trg"
MANIFEST_FILE = "manifest.tsv"
TRG_VOCAB_FILE = "vocab.trg.txt"
REPORT_FILE = "report.tsv"
BUCKETS_FILE = "buckets.tsv"
ERRORS_FILE = "errors.tsv"
