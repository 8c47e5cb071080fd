"""taskfinder: hybrid task-catalog search with a rationale lexicon and
constrained LLM re-ranking.

Typical use::

    from taskfinder import TaskRetriever, load_desk_catalog, load_desk_suite

    retriever = TaskRetriever().fit(load_desk_catalog(), load_desk_suite())
    retriever.predict(["child missing shots"])
"""

from .catalog import Task, TaskCatalog, concat_text, load_catalog, save_catalog
from .config import EngineConfig, load_config
from .corpus import load_desk_catalog, load_desk_suite
from .embedding import (
    EmbeddingCache,
    EmbeddingVector,
    HashingEmbedder,
    RemoteEmbedder,
    cached_embed,
    content_digest,
    cosine,
    provider_from_env,
)
from .errors import (
    CacheCorrupt,
    ConfigError,
    DegenerateSplit,
    DimensionMismatch,
    DuplicateTaskId,
    EmbeddingError,
    EmptyCatalogError,
    EmptyJudgmentSet,
    EmptyShortlist,
    InvalidVector,
    MalformedResponse,
    ParseError,
    ProviderUnavailable,
    TaskFinderError,
    UnknownTaskId,
    UnresolvableGoldId,
    ZeroVector,
)
from .evaluation import (
    MetricsReport,
    QueryJudgment,
    adaptation_scenario,
    evaluate_suite,
    hit_at_k,
    mrr,
    precision_at_k,
    recall_at_k,
    split_suite,
)
from .lexicon import (
    RationaleLexicon,
    TestCase,
    add_test_case,
    build_lexicon,
    dump_lexicon,
    load_suite,
    save_suite,
)
from .prefilter import (
    ScoredTask,
    ScoringWeights,
    Shortlist,
    rank_catalog,
    score_lexical,
    score_rationale,
    score_task,
    score_typo,
)
from .reranker import (
    OverlapMockClient,
    PromptBundle,
    RemoteLLMClient,
    RerankEntry,
    RerankResult,
    build_prompt,
    client_from_env,
    parse_and_validate,
    rerank,
    select_examples,
)
from .retriever import QueryResult, TaskRetriever
from .textproc import edit_distance, jaccard, overlap, tokenize

__version__ = "0.1.0"

__all__ = [
    "CacheCorrupt",
    "ConfigError",
    "DegenerateSplit",
    "DimensionMismatch",
    "DuplicateTaskId",
    "EmbeddingCache",
    "EmbeddingError",
    "EmbeddingVector",
    "EmptyCatalogError",
    "EmptyJudgmentSet",
    "EmptyShortlist",
    "EngineConfig",
    "HashingEmbedder",
    "InvalidVector",
    "MalformedResponse",
    "MetricsReport",
    "OverlapMockClient",
    "ParseError",
    "PromptBundle",
    "ProviderUnavailable",
    "QueryJudgment",
    "QueryResult",
    "RationaleLexicon",
    "RemoteEmbedder",
    "RemoteLLMClient",
    "RerankEntry",
    "RerankResult",
    "ScoredTask",
    "ScoringWeights",
    "Shortlist",
    "Task",
    "TaskCatalog",
    "TaskFinderError",
    "TaskRetriever",
    "TestCase",
    "UnknownTaskId",
    "UnresolvableGoldId",
    "ZeroVector",
    "adaptation_scenario",
    "add_test_case",
    "build_lexicon",
    "build_prompt",
    "cached_embed",
    "client_from_env",
    "concat_text",
    "content_digest",
    "cosine",
    "dump_lexicon",
    "edit_distance",
    "evaluate_suite",
    "hit_at_k",
    "jaccard",
    "load_catalog",
    "load_config",
    "load_desk_catalog",
    "load_desk_suite",
    "load_suite",
    "mrr",
    "overlap",
    "parse_and_validate",
    "precision_at_k",
    "provider_from_env",
    "rank_catalog",
    "recall_at_k",
    "rerank",
    "save_catalog",
    "save_suite",
    "score_lexical",
    "score_rationale",
    "score_task",
    "score_typo",
    "select_examples",
    "split_suite",
    "tokenize",
]
