"""End-to-end engine behind a scikit-learn style estimator.

``fit`` indexes a catalog (and optionally a test suite, which feeds both the
rationale lexicon and in-context example selection); ``predict`` maps queries
to ranked task-id lists. Weights and stage toggles are constructor params so
`get_params`/`set_params`/`clone` give ablation runs for free.
"""

from __future__ import annotations

from dataclasses import dataclass
from tempfile import TemporaryDirectory
from typing import Iterable, Sequence

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .catalog import Task, TaskCatalog, concat_text
from .embedding import EmbeddingCache, EmbeddingProvider, cached_embed
from .errors import InvalidVector, ProviderUnavailable
from .lexicon import EMPTY_LEXICON, RationaleLexicon, TestCase, build_lexicon
from .prefilter import ScoringWeights, Shortlist, rank_catalog
from .reranker import LLMClient, RerankResult, rerank

MODE_PREFILTER = "prefilter"

DEFAULT_TOP_K = 5


def ensure_catalog(value: TaskCatalog | Iterable[Task]) -> TaskCatalog:
    """Accept a ready catalog or any iterable of tasks."""
    if isinstance(value, TaskCatalog):
        return value
    return TaskCatalog(value)


def ensure_suite(value: Iterable[TestCase] | None) -> tuple[TestCase, ...]:
    if value is None:
        return ()
    cases = tuple(value)
    for case in cases:
        if not isinstance(case, TestCase):
            raise TypeError(f"suite entries must be TestCase, got {type(case).__name__}")
    return cases


@dataclass(frozen=True)
class QueryResult:
    """Final answer for one query plus the evidence that produced it."""

    query: str
    task_ids: tuple[str, ...]
    task_names: tuple[str, ...]
    mode: str
    shortlist: Shortlist
    rerank_result: RerankResult | None

    @property
    def degraded_signals(self) -> frozenset[str]:
        signals: set[str] = set()
        for candidate in self.shortlist:
            signals.update(candidate.degraded_signals)
        return frozenset(signals)


class TaskRetriever(BaseEstimator):
    """Two-stage task search: deterministic pre-filter, constrained re-rank.

    Parameters mirror the scoring weights plus stage toggles. `provider` and
    `client` accept prebuilt handles for testing; left as None they are
    resolved from the environment at fit time (offline deterministic
    implementations when no endpoint is configured).
    """

    def __init__(
        self,
        alpha: float = 1.0,
        beta: float = 0.8,
        gamma: float = 0.5,
        delta: float = 0.3,
        w_name: float = 2.0,
        w_help: float = 1.0,
        shortlist_k: int = 15,
        top_k: int = DEFAULT_TOP_K,
        use_reranker: bool = True,
        max_examples: int = 3,
        cache_path: str | None = None,
        provider: EmbeddingProvider | None = None,
        client: LLMClient | None = None,
        stopwords: Iterable[str] | None = None,
    ):
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma
        self.delta = delta
        self.w_name = w_name
        self.w_help = w_help
        self.shortlist_k = shortlist_k
        self.top_k = top_k
        self.use_reranker = use_reranker
        self.max_examples = max_examples
        self.cache_path = cache_path
        self.provider = provider
        self.client = client
        self.stopwords = stopwords

    def _weights(self) -> ScoringWeights:
        return ScoringWeights(
            alpha=self.alpha,
            beta=self.beta,
            gamma=self.gamma,
            delta=self.delta,
            w_name=self.w_name,
            w_help=self.w_help,
            shortlist_k=self.shortlist_k,
        )

    def fit(
        self,
        catalog: TaskCatalog | Iterable[Task],
        suite: Iterable[TestCase] | None = None,
    ) -> "TaskRetriever":
        """Index the catalog, mine the lexicon, and warm the embedding cache."""
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        weights = self._weights()
        self.catalog_ = ensure_catalog(catalog)
        self.suite_ = ensure_suite(suite)
        self.stopwords_ = (
            None if self.stopwords is None else frozenset(w.lower() for w in self.stopwords)
        )
        self.lexicon_: RationaleLexicon = (
            build_lexicon(self.suite_, self.catalog_, self.stopwords_)
            if self.suite_
            else EMPTY_LEXICON
        )
        self.weights_ = weights
        self.provider_ = self.provider if self.provider is not None else self._default_provider()
        self.client_ = self.client if self.client is not None else self._default_client()
        if self.cache_path is not None:
            self.cache_ = EmbeddingCache(self.cache_path)
        else:
            self._cache_dir = TemporaryDirectory(prefix="taskfinder-cache-")
            self.cache_ = EmbeddingCache(f"{self._cache_dir.name}/embeddings.tsv")
        self.n_tasks_ = len(self.catalog_)
        self.warm_cache()
        return self

    @staticmethod
    def _default_provider() -> EmbeddingProvider:
        from .embedding import provider_from_env

        return provider_from_env()

    @staticmethod
    def _default_client() -> LLMClient:
        from .reranker import client_from_env

        return client_from_env()

    def warm_cache(self) -> int:
        """Embed every catalog entry; returns how many could be cached."""
        self._check_fitted()
        warmed = 0
        for task in self.catalog_:
            try:
                cached_embed(self.cache_, self.provider_, concat_text(task))
                warmed += 1
            except (ProviderUnavailable, InvalidVector):
                continue
        return warmed

    def _check_fitted(self) -> None:
        if not hasattr(self, "catalog_"):
            raise NotFittedError(
                "This TaskRetriever instance is not fitted yet; call fit() first."
            )

    def shortlist(self, query: str) -> Shortlist:
        """First stage only: the deterministic top-K candidates."""
        self._check_fitted()
        return rank_catalog(
            query,
            self.catalog_,
            self.lexicon_,
            self.cache_,
            self.provider_,
            self.weights_,
            self.stopwords_,
        )

    def rank(self, query: str) -> QueryResult:
        """Full pipeline for one query."""
        self._check_fitted()
        shortlist = self.shortlist(query)
        if not self.use_reranker:
            top = shortlist.candidates[: self.top_k]
            return QueryResult(
                query=query,
                task_ids=tuple(c.task_id for c in top),
                task_names=tuple(c.task.name for c in top),
                mode=MODE_PREFILTER,
                shortlist=shortlist,
                rerank_result=None,
            )
        result = rerank(
            query,
            shortlist,
            self.suite_,
            self.client_,
            catalog=self.catalog_,
            max_examples=self.max_examples,
        )
        top_entries = result.entries[: self.top_k]
        ids = tuple(shortlist[entry.idx].task_id for entry in top_entries)
        names = tuple(entry.task_name for entry in top_entries)
        return QueryResult(
            query=query,
            task_ids=ids,
            task_names=names,
            mode=result.mode,
            shortlist=shortlist,
            rerank_result=result,
        )

    def predict(self, queries: Sequence[str] | str) -> list[list[str]]:
        """Top-k task ids per query; a bare string counts as one query."""
        self._check_fitted()
        if isinstance(queries, str):
            queries = [queries]
        return [list(self.rank(query).task_ids) for query in queries]

    def transform(self, queries: Sequence[str] | str) -> list[list[str]]:
        return self.predict(queries)

    def score(self, X: Sequence[str], y: Sequence[Iterable[str]]) -> float:
        """Mean Hit@top_k over (query, gold-id collection) pairs."""
        self._check_fitted()
        if len(X) != len(y):
            raise ValueError(f"got {len(X)} queries but {len(y)} gold sets")
        if not X:
            raise ValueError("cannot score an empty query set")
        hits = 0
        for query, gold in zip(X, y):
            gold_set = frozenset(gold)
            returned = self.rank(query).task_ids
            if gold_set.intersection(returned):
                hits += 1
        return hits / len(X)
