"""Tokenization, set similarity, and edit-distance primitives.

Every scoring signal goes through the same normalization so that the
lexical overlap, the rationale lexicon, and the typo matcher all agree on
what a "token" is. All functions here are pure.
"""

from __future__ import annotations

import re
from collections.abc import Collection

TokenSet = frozenset[str]

# Deliberately minimal: abbreviations and domain jargon must survive, so no
# stemming and only the highest-frequency function words are dropped.
DEFAULT_STOPWORDS: TokenSet = frozenset(
    {"a", "an", "and", "for", "of", "the", "to", "in", "on", "with"}
)

# Alphanumeric runs, Unicode-aware, underscore excluded.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str, stopwords: Collection[str] | None = None) -> TokenSet:
    """Lowercase ``text``, split on non-alphanumeric runs, drop stopwords.

    Returns a set: token multiplicity never matters downstream.
    """
    sw = DEFAULT_STOPWORDS if stopwords is None else stopwords
    return frozenset(t for t in _TOKEN_RE.findall(text.lower()) if t not in sw)


def jaccard(a: TokenSet, b: TokenSet) -> float:
    """Jaccard similarity |a ∩ b| / |a ∪ b|; 0.0 when both sets are empty."""
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


def overlap(query: TokenSet, field: TokenSet) -> float:
    """Fraction of query tokens present in ``field``; 0.0 for an empty query.

    Normalizing by the query length keeps the lexical score invariant to
    query verbosity.
    """
    if not query:
        return 0.0
    return len(query & field) / len(query)


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance with unit-cost insert, delete, and substitute."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(b) > len(a):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]
