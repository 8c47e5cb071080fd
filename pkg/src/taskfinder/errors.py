"""Exception types shared across the package.

Errors are grouped by subsystem; everything derives from TaskFinderError so
callers can catch broadly at process boundaries (CLI, service wrappers).
"""

from __future__ import annotations


class TaskFinderError(Exception):
    """Base class for all taskfinder errors."""


class ParseError(TaskFinderError):
    """A record file (catalog, suite, report) failed to parse."""

    def __init__(self, path, line_no: int, reason: str):
        self.path = path
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"{path}:{line_no}: {reason}")


class DuplicateTaskId(TaskFinderError):
    """Two catalog records share the same id."""

    def __init__(self, task_id: str):
        self.task_id = task_id
        super().__init__(f"duplicate task id: {task_id!r}")


class EmptyCatalogError(TaskFinderError):
    """A catalog with zero tasks cannot be ranked over."""


class UnknownTaskId(TaskFinderError):
    """Lookup of a task id that is not in the catalog."""

    def __init__(self, task_id: str):
        self.task_id = task_id
        super().__init__(f"unknown task id: {task_id!r}")


class UnresolvableGoldId(TaskFinderError):
    """A test case references a gold task id absent from the catalog."""

    def __init__(self, query: str, task_id: str):
        self.query = query
        self.task_id = task_id
        super().__init__(f"test case {query!r} references unknown task id {task_id!r}")


class EmbeddingError(TaskFinderError):
    """Base class for embedding-layer errors."""


class ProviderUnavailable(EmbeddingError):
    """The embedding provider could not be reached.

    This is a degradation signal, not a fatal failure: the pre-filter reacts
    by zeroing the embedding term for the affected candidates.
    """


class InvalidVector(EmbeddingError):
    """A provider returned a vector that violates its own contract."""


class DimensionMismatch(EmbeddingError):
    """Cosine similarity of vectors with different dimensions."""


class ZeroVector(EmbeddingError):
    """Cosine similarity is undefined for an all-zero vector."""


class CacheCorrupt(TaskFinderError):
    """The on-disk embedding cache contains an unreadable record."""

    def __init__(self, path, line_no: int, reason: str):
        self.path = path
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"corrupt embedding cache {path}:{line_no}: {reason}")


class EmptyShortlist(TaskFinderError):
    """Re-ranking requires at least one shortlist candidate."""


class MalformedResponse(TaskFinderError):
    """An LLM response did not conform to the declared output schema."""


class EmptyJudgmentSet(TaskFinderError):
    """Metrics over zero queries are undefined."""


class DegenerateSplit(TaskFinderError):
    """A train/test split left one side empty."""


class ConfigError(TaskFinderError):
    """Invalid configuration file or setting."""
