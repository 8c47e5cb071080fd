"""Deterministic first stage: score the whole catalog, keep the top K.

The total score blends four signals: field-weighted lexical overlap,
rationale-lexicon hits, embedding cosine, and a fuzzy typo match against
name tokens. An unreachable embedding provider zeroes its signal for the
affected candidates instead of failing the query.
"""

from __future__ import annotations

from collections.abc import Collection
from dataclasses import dataclass, field

from .catalog import Task, TaskCatalog, concat_text
from .embedding import EmbeddingCache, EmbeddingProvider, EmbeddingVector, cached_embed, cosine
from .errors import EmptyCatalogError, InvalidVector, ProviderUnavailable
from .lexicon import RationaleLexicon
from .textproc import TokenSet, edit_distance, overlap, tokenize

DEFAULT_ALPHA = 1.0
DEFAULT_BETA = 0.8
DEFAULT_GAMMA = 0.5
DEFAULT_DELTA = 0.3
DEFAULT_W_NAME = 2.0
DEFAULT_W_HELP = 1.0
DEFAULT_SHORTLIST_K = 15

MIN_TYPO_LEN = 4
# Tokens of 4-7 characters tolerate one edit; 8+ tolerate two.
LONG_TOKEN_LEN = 8


@dataclass(frozen=True)
class ScoringWeights:
    """Signal weights, field weights, and the shortlist width."""

    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    gamma: float = DEFAULT_GAMMA
    delta: float = DEFAULT_DELTA
    w_name: float = DEFAULT_W_NAME
    w_help: float = DEFAULT_W_HELP
    shortlist_k: int = DEFAULT_SHORTLIST_K

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta", "w_name", "w_help"):
            value = getattr(self, name)
            if value < 0:
                raise ValueError(f"{name} must be >= 0, got {value}")
        if not self.w_name > self.w_help:
            raise ValueError(
                f"w_name must exceed w_help, got {self.w_name} <= {self.w_help}"
            )
        if self.shortlist_k < 1:
            raise ValueError(f"shortlist_k must be >= 1, got {self.shortlist_k}")


@dataclass(frozen=True)
class ScoredTask:
    """One candidate with its signal breakdown and combined total."""

    task: Task
    total: float
    s_lex: float
    s_rat: float
    s_emb: float
    s_typo: float
    degraded_signals: frozenset[str] = field(default_factory=frozenset)

    @property
    def task_id(self) -> str:
        return self.task.id


@dataclass(frozen=True)
class Shortlist:
    """Top-k candidates in rank order (descending total, catalog-order ties)."""

    query: str
    candidates: tuple[ScoredTask, ...]
    k: int

    def __len__(self) -> int:
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)

    def __getitem__(self, index: int) -> ScoredTask:
        return self.candidates[index]

    def task_ids(self) -> tuple[str, ...]:
        return tuple(c.task_id for c in self.candidates)


def score_lexical(
    query_tokens: TokenSet,
    task: Task,
    weights: ScoringWeights,
    stopwords: Collection[str] | None = None,
) -> float:
    """Field-weighted token overlap; name matches outrank help-text matches."""
    s_name = overlap(query_tokens, tokenize(task.name, stopwords))
    s_help = overlap(query_tokens, tokenize(task.help_text, stopwords))
    return weights.w_name * s_name + weights.w_help * s_help


def score_rationale(lexicon: RationaleLexicon, query_tokens: TokenSet, task_id: str) -> float:
    """Count of query tokens the lexicon associates with this task."""
    return float(lexicon.hits(query_tokens, task_id))


def _typo_limit(token: str) -> int:
    return 2 if len(token) >= LONG_TOKEN_LEN else 1


def score_typo(
    query_tokens: TokenSet, task: Task, stopwords: Collection[str] | None = None
) -> float:
    """Fraction of long-enough query tokens that nearly match a name token.

    Exact matches are excluded (the lexical signal already rewards them);
    only tokens of length >= 4 qualify, so short function words never fire.
    """
    name_tokens = tokenize(task.name, stopwords)
    qualifying = [t for t in query_tokens if len(t) >= MIN_TYPO_LEN]
    if not qualifying or not name_tokens:
        return 0.0
    matched = 0
    for token in qualifying:
        limit = _typo_limit(token)
        if token in name_tokens:
            continue
        if any(edit_distance(token, name_token) <= limit for name_token in name_tokens):
            matched += 1
    return matched / len(qualifying)


def combine(weights: ScoringWeights, s_lex: float, s_rat: float, s_emb: float, s_typo: float) -> float:
    return (
        weights.alpha * s_lex
        + weights.beta * s_rat
        + weights.gamma * s_emb
        + weights.delta * s_typo
    )


def _try_embed(
    cache: EmbeddingCache, provider: EmbeddingProvider, text: str
) -> EmbeddingVector | None:
    try:
        return cached_embed(cache, provider, text)
    except (ProviderUnavailable, InvalidVector):
        return None


def _score_one(
    query_tokens: TokenSet,
    query_vector: EmbeddingVector | None,
    task: Task,
    lexicon: RationaleLexicon,
    cache: EmbeddingCache,
    provider: EmbeddingProvider,
    weights: ScoringWeights,
    stopwords: Collection[str] | None = None,
) -> ScoredTask:
    s_lex = score_lexical(query_tokens, task, weights, stopwords)
    s_rat = score_rationale(lexicon, query_tokens, task.id)
    s_typo = score_typo(query_tokens, task, stopwords)
    degraded: frozenset[str] = frozenset()
    s_emb = 0.0
    if query_vector is None:
        degraded = frozenset({"emb"})
    else:
        task_vector = _try_embed(cache, provider, concat_text(task))
        if task_vector is None:
            degraded = frozenset({"emb"})
        else:
            s_emb = cosine(query_vector, task_vector)
    return ScoredTask(
        task=task,
        total=combine(weights, s_lex, s_rat, s_emb, s_typo),
        s_lex=s_lex,
        s_rat=s_rat,
        s_emb=s_emb,
        s_typo=s_typo,
        degraded_signals=degraded,
    )


def score_task(
    query: str,
    task: Task,
    lexicon: RationaleLexicon,
    cache: EmbeddingCache,
    provider: EmbeddingProvider,
    weights: ScoringWeights,
    stopwords: Collection[str] | None = None,
) -> ScoredTask:
    """Score one candidate; embedding trouble zeroes s_emb, never raises."""
    query_tokens = tokenize(query, stopwords)
    query_vector = _try_embed(cache, provider, query)
    return _score_one(
        query_tokens, query_vector, task, lexicon, cache, provider, weights, stopwords
    )


def rank_catalog(
    query: str,
    catalog: TaskCatalog,
    lexicon: RationaleLexicon,
    cache: EmbeddingCache,
    provider: EmbeddingProvider,
    weights: ScoringWeights,
    stopwords: Collection[str] | None = None,
) -> Shortlist:
    """Score every task once (single query embed) and keep the top k.

    Ties break toward the earlier catalog position, making repeat runs over
    a fixed cache byte-identical.
    """
    if len(catalog) == 0:
        raise EmptyCatalogError("cannot rank an empty catalog")
    query_tokens = tokenize(query, stopwords)
    query_vector = _try_embed(cache, provider, query)
    scored = [
        _score_one(query_tokens, query_vector, task, lexicon, cache, provider, weights, stopwords)
        for task in catalog
    ]
    ranked = sorted(
        scored, key=lambda st: (-st.total, catalog.position(st.task_id))
    )
    k = min(weights.shortlist_k, len(catalog))
    return Shortlist(query=query, candidates=tuple(ranked[:k]), k=k)
