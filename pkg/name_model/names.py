import re
import unicodedata
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

SUFFIX_PATTERN = re.compile(r"^[0-9]{4}$")
KEY_SEPARATOR = "|"


class EmptyNameError(ValueError):
    """Raised when a name string is empty after trimming."""


@dataclass(frozen=True)
class AuthorMention:
    mention_id: int
    record_key: str
    position: int  # 1-based
    raw_name: str


@dataclass(frozen=True)
class ParsedName:
    forenames: Tuple[str, ...]
    surname: str
    homonym_suffix: Optional[str]
    display_name: str


@dataclass(frozen=True, order=True)
class BlockKey:
    key: str

    def __str__(self):
        return self.key


@dataclass(frozen=True, order=True)
class InitialsKey:
    key: str

    def __str__(self):
        return self.key


def parse_name(raw_name: str) -> ParsedName:
    # stray combining marks have no letter to key on
    tokens = [token for token in raw_name.split() if normalize_key_text(token)]
    if not tokens:
        raise EmptyNameError(f"empty author name: {raw_name!r}")

    suffix = None
    # A bare "0001" stays a surname; a suffix needs a name in front of it
    if len(tokens) > 1 and SUFFIX_PATTERN.match(tokens[-1]):
        suffix = tokens[-1]
        tokens = tokens[:-1]

    return ParsedName(
        forenames=tuple(tokens[:-1]),
        surname=tokens[-1],
        homonym_suffix=suffix,
        display_name=" ".join(tokens),
    )


def strip_suffix(raw_name: str) -> str:
    return parse_name(raw_name).display_name


def normalize_key_text(text: str) -> str:
    """Casefold and drop combining marks (é -> e). Used for keys only."""
    decomposed = unicodedata.normalize("NFKD", text)
    stripped = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    return stripped.casefold()


def _initial(token: str) -> str:
    normalized = normalize_key_text(token)
    for ch in normalized:
        if ch.isalnum():
            return ch
    return normalized[:1]


def blocking_key(name: ParsedName) -> BlockKey:
    first = _initial(name.forenames[0]) if name.forenames else ""
    return BlockKey(first + KEY_SEPARATOR + normalize_key_text(name.surname))


def all_initials_key(name: ParsedName) -> InitialsKey:
    initials = "".join(_initial(token) for token in name.forenames)
    return InitialsKey(initials + KEY_SEPARATOR + normalize_key_text(name.surname))


def normalize_title(title: str) -> str:
    return "".join(ch for ch in title.lower() if ch.isalnum())


# Venues follow the same alphanumeric-only rule as titles
normalize_venue = normalize_title


def _forename_form(token: str) -> str:
    return normalize_key_text(token).rstrip(".")


def _is_initial(form: str) -> bool:
    return len(form) == 1


def _tokens_match(a: str, b: str) -> bool:
    if a == b:
        return True
    if _is_initial(a) and b[:1] == a:
        return True
    if _is_initial(b) and a[:1] == b:
        return True
    return False


def _embeds(shorter: Sequence[str], longer: Sequence[str]) -> bool:
    """True if `shorter` matches some subsequence of `longer` token by token."""
    n, m = len(shorter), len(longer)
    # reachable[j]: shorter[:i] embeds into longer[:j]
    reachable = [True] * (m + 1)
    for i in range(1, n + 1):
        row = [False] * (m + 1)
        for j in range(1, m + 1):
            row[j] = row[j - 1] or (
                reachable[j - 1] and _tokens_match(shorter[i - 1], longer[j - 1])
            )
        reachable = row
    return reachable[m]


def names_compatible(a: ParsedName, b: ParsedName) -> bool:
    if normalize_key_text(a.surname) != normalize_key_text(b.surname):
        return False

    left: List[str] = sorted(_forename_form(t) for t in a.forenames)
    right: List[str] = sorted(_forename_form(t) for t in b.forenames)
    if len(left) > len(right):
        left, right = right, left
    return _embeds(left, right)
