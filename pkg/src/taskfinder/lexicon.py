"""Rationale lexicon: (word, task) associations mined from retrieval test cases.

Each test case pairs a query with its gold tasks and a free-text rationale
explaining the mapping. Tokenizing the rationale and crossing its tokens
with the gold task ids yields a zero-annotation-cost semantic memory that
bridges synonyms and abbreviations the catalog metadata never mentions.
Only the rationale feeds the lexicon; the query text is reserved for
in-context example selection.

Suite file format (UTF-8, one record per line, ``#`` lines ignored)::

    query<TAB>gold_id_1,gold_id_2,...<TAB>rationale
"""

from __future__ import annotations

from collections.abc import Collection, Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .catalog import TaskCatalog
from .errors import ParseError, UnresolvableGoldId
from .textproc import TokenSet, tokenize

MAX_GOLD_TASKS = 5


@dataclass(frozen=True)
class TestCase:
    """A (query, gold task ids, rationale) triple from the test suite."""

    __test__ = False  # keep pytest from collecting this as a test class

    query: str
    gold_task_ids: frozenset[str]
    rationale: str

    def __post_init__(self):
        object.__setattr__(self, "gold_task_ids", frozenset(self.gold_task_ids))
        if not self.query.strip():
            raise ValueError("test case query must be non-empty")
        if not self.gold_task_ids:
            raise ValueError(f"test case {self.query!r}: needs at least one gold task id")
        if len(self.gold_task_ids) > MAX_GOLD_TASKS:
            raise ValueError(
                f"test case {self.query!r}: at most {MAX_GOLD_TASKS} gold task ids allowed"
            )


@dataclass(frozen=True)
class RationaleLexicon:
    """Immutable word → task-id association set with provenance counts.

    Scoring uses pure membership (each query token boosts a task at most
    once); the per-pair source counts exist only so operators can trace a
    boost back to the test cases that created it.
    """

    entries: dict[str, frozenset[str]] = field(default_factory=dict)
    source_counts: dict[tuple[str, str], int] = field(default_factory=dict)

    def __len__(self) -> int:
        """Number of distinct (word, task) pairs."""
        return len(self.source_counts)

    def __contains__(self, pair: tuple[str, str]) -> bool:
        word, task_id = pair
        return task_id in self.entries.get(word, frozenset())

    def words(self) -> frozenset[str]:
        return frozenset(self.entries)

    def has_word(self, word: str) -> bool:
        return word in self.entries

    def tasks_for(self, word: str) -> frozenset[str]:
        return self.entries.get(word, frozenset())

    def source_count(self, word: str, task_id: str) -> int:
        return self.source_counts.get((word, task_id), 0)

    def hits(self, query_tokens: TokenSet, task_id: str) -> int:
        """Number of query tokens associated with ``task_id`` (each counts once)."""
        return sum(1 for w in query_tokens if task_id in self.entries.get(w, frozenset()))


EMPTY_LEXICON = RationaleLexicon()


def _check_gold_ids(case: TestCase, catalog: TaskCatalog) -> None:
    for task_id in case.gold_task_ids:
        if task_id not in catalog:
            raise UnresolvableGoldId(case.query, task_id)


def build_lexicon(
    suite: Iterable[TestCase],
    catalog: TaskCatalog,
    stopwords: Collection[str] | None = None,
) -> RationaleLexicon:
    """Cross every rationale token with the case's gold ids, over the suite.

    Order-insensitive: the same suite in any order produces the same lexicon.
    """
    counts: dict[tuple[str, str], int] = {}
    for case in suite:
        _check_gold_ids(case, catalog)
        for word in tokenize(case.rationale, stopwords):
            for task_id in case.gold_task_ids:
                pair = (word, task_id)
                counts[pair] = counts.get(pair, 0) + 1
    entries: dict[str, set[str]] = {}
    for word, task_id in counts:
        entries.setdefault(word, set()).add(task_id)
    return RationaleLexicon(
        entries={w: frozenset(ids) for w, ids in entries.items()},
        source_counts=counts,
    )


def add_test_case(
    lexicon: RationaleLexicon,
    case: TestCase,
    catalog: TaskCatalog,
    stopwords: Collection[str] | None = None,
) -> RationaleLexicon:
    """Return a new lexicon equal to rebuilding with ``case`` appended."""
    _check_gold_ids(case, catalog)
    counts = dict(lexicon.source_counts)
    entries = {w: set(ids) for w, ids in lexicon.entries.items()}
    for word in tokenize(case.rationale, stopwords):
        for task_id in case.gold_task_ids:
            pair = (word, task_id)
            counts[pair] = counts.get(pair, 0) + 1
            entries.setdefault(word, set()).add(task_id)
    return RationaleLexicon(
        entries={w: frozenset(ids) for w, ids in entries.items()},
        source_counts=counts,
    )


def _parse_suite_line(path: Path, line_no: int, line: str) -> TestCase:
    parts = line.split("\t")
    if len(parts) != 3:
        raise ParseError(path, line_no, f"expected 3 tab-separated fields, got {len(parts)}")
    query, gold_field, rationale = parts
    gold_ids = frozenset(g.strip() for g in gold_field.split(",") if g.strip())
    try:
        return TestCase(query=query, gold_task_ids=gold_ids, rationale=rationale)
    except ValueError as exc:
        raise ParseError(path, line_no, str(exc)) from exc


def load_suite(path: str | Path) -> list[TestCase]:
    """Parse a test-suite file; see the module docstring for the format."""
    path = Path(path)
    cases: list[TestCase] = []
    with path.open(encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            cases.append(_parse_suite_line(path, line_no, line))
    return cases


def format_case(case: TestCase) -> str:
    gold = ",".join(sorted(case.gold_task_ids))
    return f"{case.query}\t{gold}\t{case.rationale}"


def save_suite(suite: Sequence[TestCase], path: str | Path) -> None:
    path = Path(path)
    lines = ["# query\tgold_ids\trationale"]
    lines.extend(format_case(case) for case in suite)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def append_case(path: str | Path, case: TestCase) -> None:
    """Append one test case to a suite file (creates the file if missing)."""
    path = Path(path)
    needs_newline = path.exists() and path.stat().st_size > 0 and not path.read_text(
        encoding="utf-8"
    ).endswith("\n")
    with path.open("a", encoding="utf-8") as fh:
        if needs_newline:
            fh.write("\n")
        fh.write(format_case(case) + "\n")


def dump_lexicon(lexicon: RationaleLexicon) -> str:
    """Inspection dump: one ``word<TAB>task_id<TAB>count`` line per pair, sorted."""
    lines = [
        f"{word}\t{task_id}\t{count}"
        for (word, task_id), count in sorted(lexicon.source_counts.items())
    ]
    return "\n".join(lines) + ("\n" if lines else "")
