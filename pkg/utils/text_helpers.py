"""String helpers shared by the transforms and the evaluator."""

import string
from typing import List, Optional, Sequence, Tuple

import edit_distance

from utils.constants import VOWELS

# Leading/trailing punctuation stripped before matching; '@' delimits abstract tokens
_STRIP_CHARS = "".join(ch for ch in string.punctuation if ch != "@") + "„“”‚‘’«»…–—¿¡"


def is_vowel(ch: str, vowels: str = VOWELS) -> bool:
    return ch.lower() in vowels


def vowel_positions(word: str, vowels: str = VOWELS) -> List[int]:
    return [i for i, ch in enumerate(word) if is_vowel(ch, vowels)]


def last_two_vowels(word: str, vowels: str = VOWELS) -> Optional[Tuple[str, str]]:
    """Last two vowel characters (lowercased); a single vowel is doubled."""
    found = [word[i].lower() for i in vowel_positions(word, vowels)]
    if not found:
        return None
    if len(found) == 1:
        return found[0], found[0]
    return found[-2], found[-1]


def normalize_token(token: str) -> str:
    return token.strip(_STRIP_CHARS).casefold()


def normalize_tokens(line: str) -> List[str]:
    """Whitespace-tokenize, strip edge punctuation and case-fold; empty results are kept."""
    return [normalize_token(tok) for tok in line.split()]


def matches_skeleton(token: str, triple: Sequence[str], vowels: str = VOWELS) -> bool:
    """True iff token is c1 V c2 V c3 for the given consonants."""
    if len(token) != 5:
        return False
    c1, c2, c3 = (c.casefold() for c in triple)
    return (
        token[0] == c1 and token[2] == c2 and token[4] == c3
        and is_vowel(token[1], vowels) and is_vowel(token[3], vowels)
    )


def levenshtein(a: str, b: str) -> int:
    return edit_distance.SequenceMatcher(a=a, b=b).distance()


def normalized_levenshtein(a: str, b: str) -> float:
    """Edit distance divided by the longer length; 0.0 for two empty strings."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return levenshtein(a, b) / longest
