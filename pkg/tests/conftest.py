"""Shared fixtures."""

from __future__ import annotations

import pytest

from taskfinder.catalog import Task, TaskCatalog
from taskfinder.corpus import load_desk_catalog, load_desk_suite
from taskfinder.embedding import EmbeddingCache, HashingEmbedder
from taskfinder.lexicon import TestCase, build_lexicon
from taskfinder.prefilter import ScoringWeights
from taskfinder.reranker import OverlapMockClient


@pytest.fixture
def asq_catalog() -> TaskCatalog:
    """Tiny screening catalog used by the worked scoring examples."""
    return TaskCatalog(
        [
            Task(
                id="dev_screening",
                name="Developmental Screening",
                help_text="Complete developmental screening within 45 days",
                description="Record ASQ-3 results for each enrolled child.",
                category="health",
            ),
            Task(
                id="se_assessment",
                name="Social Emotional Assessment",
                help_text="Assess social emotional development",
                description="Track ASQ:SE-2 outcomes over the program year.",
                category="health",
            ),
        ]
    )


@pytest.fixture
def asq_case() -> TestCase:
    return TestCase(
        query="ASQ",
        gold_task_ids=frozenset({"dev_screening", "se_assessment"}),
        rationale="Ages and Stages Questionnaires for early childhood development",
    )


@pytest.fixture
def asq_lexicon(asq_catalog, asq_case):
    return build_lexicon([asq_case], asq_catalog)


@pytest.fixture(scope="session")
def desk_catalog() -> TaskCatalog:
    return load_desk_catalog()


@pytest.fixture(scope="session")
def desk_suite() -> list[TestCase]:
    return load_desk_suite()


@pytest.fixture
def provider() -> HashingEmbedder:
    return HashingEmbedder()


@pytest.fixture
def mock_client() -> OverlapMockClient:
    return OverlapMockClient()


@pytest.fixture
def weights() -> ScoringWeights:
    return ScoringWeights()


@pytest.fixture
def cache(tmp_path) -> EmbeddingCache:
    return EmbeddingCache(tmp_path / "cache.tsv")
