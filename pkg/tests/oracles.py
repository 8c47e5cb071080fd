"""Independent brute-force references the tests compare the engine against.

Everything here is written for obviousness, not speed: full-matrix dynamic
programming, raw set arithmetic, exhaustive pair enumeration, exact rational
arithmetic. None of it imports the package under test.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from fractions import Fraction
from typing import Iterable, Sequence

REF_STOPWORDS = frozenset({"a", "an", "and", "for", "of", "the", "to", "in", "on", "with"})

_WORD_RE = re.compile(r"[0-9A-Za-zÀ-￿]+")


def tokenize_ref(text: str, stopwords: frozenset[str] = REF_STOPWORDS) -> frozenset[str]:
    words = _WORD_RE.findall(text.lower().replace("_", " "))
    return frozenset(w for w in words if w and w not in stopwords)


def jaccard_ref(a: frozenset[str], b: frozenset[str]) -> Fraction:
    union = a | b
    if not union:
        return Fraction(0)
    return Fraction(len(a & b), len(union))


def overlap_ref(query: frozenset[str], field: frozenset[str]) -> Fraction:
    if not query:
        return Fraction(0)
    return Fraction(len(query & field), len(query))


def levenshtein_ref(a: str, b: str) -> int:
    rows, cols = len(a) + 1, len(b) + 1
    matrix = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        matrix[i][0] = i
    for j in range(cols):
        matrix[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            matrix[i][j] = min(
                matrix[i - 1][j] + 1,
                matrix[i][j - 1] + 1,
                matrix[i - 1][j - 1] + cost,
            )
    return matrix[rows - 1][cols - 1]


def lexicon_pairs_ref(
    cases: Iterable[tuple[frozenset[str], str]],
) -> tuple[set[tuple[str, str]], Counter]:
    """Enumerate (word, task) pairs from (gold_ids, rationale) cases."""
    counts: Counter = Counter()
    for gold_ids, rationale in cases:
        for word in tokenize_ref(rationale):
            for task_id in gold_ids:
                counts[(word, task_id)] += 1
    return set(counts), counts


def cosine_ref(a: Sequence[float], b: Sequence[float]) -> float:
    dot = math.fsum(x * y for x, y in zip(a, b))
    norm_a = math.sqrt(math.fsum(x * x for x in a))
    norm_b = math.sqrt(math.fsum(y * y for y in b))
    return dot / (norm_a * norm_b)


def hit_ref(gold: frozenset[str], returned: Sequence[str], k: int) -> Fraction:
    return Fraction(1) if gold & set(returned[:k]) else Fraction(0)


def precision_ref(gold: frozenset[str], returned: Sequence[str], k: int) -> Fraction:
    return Fraction(len(gold & set(returned[:k])), k)


def recall_ref(gold: frozenset[str], returned: Sequence[str], k: int) -> Fraction:
    return Fraction(len(gold & set(returned[:k])), len(gold))


def mrr_ref(pairs: Sequence[tuple[frozenset[str], Sequence[str]]]) -> Fraction:
    total = Fraction(0)
    for gold, returned in pairs:
        for position, task_id in enumerate(returned, start=1):
            if task_id in gold:
                total += Fraction(1, position)
                break
    return total / len(pairs)


def topk_ref(
    entries: Sequence[tuple[float, int, str]], k: int
) -> list[tuple[float, int, str]]:
    """Full sort by descending total then ascending position, sliced to k."""
    ordered = sorted(entries, key=lambda e: (-e[0], e[1]))
    return ordered[:k]


def select_examples_ref(
    query: str, case_queries: Sequence[str], max_n: int
) -> list[int]:
    """Indices of the top-max_n cases by Jaccard, zero-similarity excluded."""
    query_tokens = tokenize_ref(query)
    scored = []
    for index, case_query in enumerate(case_queries):
        similarity = jaccard_ref(query_tokens, tokenize_ref(case_query))
        if similarity > 0:
            scored.append((-similarity, index))
    scored.sort()
    return [index for _, index in scored[:max_n]]
