"""String normalization and the hybrid basic-entity similarity.

The similarity of two values of the same role is the larger of a
character-level Ratcliff/Obershelp ratio and a token-level Jaccard index,
both computed on normalized text.
"""

from __future__ import annotations

import unicodedata
from bisect import bisect_left
from dataclasses import dataclass
from functools import lru_cache

from .model import BasicEntity, Role

_SPACELESS_ROLES = frozenset({Role.REGISTRATION_NUMBER, Role.CAPITAL})


class RoleMismatch(ValueError):
    pass


@dataclass(frozen=True)
class NormalizedValue:
    text: str
    tokens: frozenset[str]


@lru_cache(maxsize=65536)
def normalize_text(raw: str, role: Role) -> NormalizedValue:
    """Fold case and accents, map punctuation to spaces, collapse whitespace.

    Registration numbers and capitals additionally drop every internal space
    from ``text`` so that digit grouping does not matter; their tokens are
    left as split.
    """
    decomposed = unicodedata.normalize("NFKD", raw)
    stripped = "".join(c for c in decomposed if not unicodedata.combining(c))
    # casefold maps some scripts (Cherokee) to uppercase; lower() restores them
    folded = stripped.casefold().lower()
    spaced = "".join(c if c.isalnum() else " " for c in folded)
    words = spaced.split()
    text = "".join(words) if role in _SPACELESS_ROLES else " ".join(words)
    return NormalizedValue(text, frozenset(words))


def _longest_match(a: str, b: str, alo: int, ahi: int, blo: int, bhi: int, b2j: dict[str, list[int]]) -> tuple[int, int, int]:
    # Dynamic programming over b positions; strict ">" keeps the earliest
    # start in a, then the earliest start in b.
    best_i, best_j, best_size = alo, blo, 0
    j2len: dict[int, int] = {}
    for i in range(alo, ahi):
        new_j2len: dict[int, int] = {}
        positions = b2j.get(a[i], ())
        for idx in range(bisect_left(positions, blo), len(positions)):
            j = positions[idx]
            if j >= bhi:
                break
            k = j2len.get(j - 1, 0) + 1
            new_j2len[j] = k
            if k > best_size:
                best_i, best_j, best_size = i - k + 1, j - k + 1, k
        j2len = new_j2len
    return best_i, best_j, best_size


def matched_characters(a: str, b: str) -> int:
    """Total length of the recursively found longest common blocks of a and b."""
    if a == b:
        return len(a)
    b2j: dict[str, list[int]] = {}
    for j, ch in enumerate(b):
        b2j.setdefault(ch, []).append(j)
    total = 0
    stack = [(0, len(a), 0, len(b))]
    while stack:
        alo, ahi, blo, bhi = stack.pop()
        i, j, k = _longest_match(a, b, alo, ahi, blo, bhi, b2j)
        if k:
            total += k
            if alo < i and blo < j:
                stack.append((alo, i, blo, j))
            if i + k < ahi and j + k < bhi:
                stack.append((i + k, ahi, j + k, bhi))
    return total


def sequence_matcher_ratio(a: str, b: str) -> float:
    """Ratcliff/Obershelp similarity ``2M / (len(a) + len(b))``.

    The block search is order dependent, so the pair is first put in
    lexicographic order; this makes the ratio exactly symmetric.
    """
    if not a and not b:
        return 1.0
    if b < a:
        a, b = b, a
    return 2.0 * matched_characters(a, b) / (len(a) + len(b))


def jaccard_index(a: frozenset[str] | set[str], b: frozenset[str] | set[str]) -> float:
    if not a and not b:
        return 1.0
    union = len(a | b)
    return len(a & b) / union


@lru_cache(maxsize=1 << 18)
def _normalized_sim(t1: str, tok1: frozenset[str], t2: str, tok2: frozenset[str]) -> float:
    return max(sequence_matcher_ratio(t1, t2), jaccard_index(tok1, tok2))


def value_sim(v1: str, v2: str, role: Role) -> float:
    """Hybrid similarity of two raw values of the same role."""
    n1, n2 = normalize_text(v1, role), normalize_text(v2, role)
    if (n2.text, sorted(n2.tokens)) < (n1.text, sorted(n1.tokens)):
        n1, n2 = n2, n1
    return _normalized_sim(n1.text, n1.tokens, n2.text, n2.tokens)


def basic_entity_sim(e1: BasicEntity, e2: BasicEntity) -> float:
    if e1.role != e2.role:
        raise RoleMismatch(f"cannot compare {e1.role.value} with {e2.role.value}")
    return value_sim(e1.value, e2.value, e1.role)


LEGAL_FORM_TOKENS = frozenset(
    {"sa", "sas", "sasu", "sarl", "eurl", "snc", "sci", "sca", "scop", "ltd", "limited", "inc", "llc", "plc", "gmbh", "corp"}
)


def variant_key(raw: str, role: Role) -> str:
    """Normalized text with trailing legal-form words removed from corporate names.

    Values of other roles map to their normalized text unchanged.
    """
    text = normalize_text(raw, role).text
    if role is not Role.CORPORATE_NAME:
        return text
    words = text.split()
    while len(words) > 1 and words[-1] in LEGAL_FORM_TOKENS:
        words.pop()
    return " ".join(words)
