"""Offline evaluation: rank metrics, suite splitting, failure tagging, and
the vocabulary-adaptation scenario.

Per-judgment metrics are exact rational numbers (fractions.Fraction) so the
independent brute-force reference used in tests can demand equality, not
closeness; reports convert to floats only at the serialization boundary.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from sklearn.base import clone

from .catalog import Task, TaskCatalog
from .errors import DegenerateSplit, EmptyJudgmentSet, ParseError
from .lexicon import TestCase
from .retriever import TaskRetriever
from .textproc import tokenize

EVAL_KS = (1, 3, 5)
ACCURACY_K = 5

FAILURE_TAGS = (
    "missing_rationale",
    "ambiguous_query",
    "lexical_gap",
    "embedding_failure",
    "other",
)

AMBIGUITY_EPSILON = 1e-6


@dataclass(frozen=True)
class QueryJudgment:
    """What came back for one query versus what should have."""

    query: str
    gold_task_ids: frozenset[str]
    returned: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "gold_task_ids", frozenset(self.gold_task_ids))
        object.__setattr__(self, "returned", tuple(self.returned))
        if not self.gold_task_ids:
            raise ValueError(f"judgment for {self.query!r}: gold set must be non-empty")
        if len(set(self.returned)) != len(self.returned):
            raise ValueError(f"judgment for {self.query!r}: returned list has duplicates")


def hit_at_k(judgment: QueryJudgment, k: int) -> Fraction:
    """1 when any gold task appears in the top k, else 0."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    found = judgment.gold_task_ids.intersection(judgment.returned[:k])
    return Fraction(1 if found else 0)


def precision_at_k(judgment: QueryJudgment, k: int) -> Fraction:
    """Relevant fraction of the top k; divisor stays k even when fewer returned."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    found = judgment.gold_task_ids.intersection(judgment.returned[:k])
    return Fraction(len(found), k)


def recall_at_k(judgment: QueryJudgment, k: int) -> Fraction:
    """Fraction of gold tasks recovered within the top k."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    found = judgment.gold_task_ids.intersection(judgment.returned[:k])
    return Fraction(len(found), len(judgment.gold_task_ids))


def first_gold_rank(judgment: QueryJudgment) -> int | None:
    """1-based rank of the first returned gold task, None when absent."""
    for position, task_id in enumerate(judgment.returned, start=1):
        if task_id in judgment.gold_task_ids:
            return position
    return None


def mrr(judgments: Sequence[QueryJudgment]) -> Fraction:
    """Mean reciprocal rank; a query with no returned gold contributes 0."""
    if not judgments:
        raise EmptyJudgmentSet("MRR over zero judgments is undefined")
    total = Fraction(0)
    for judgment in judgments:
        rank = first_gold_rank(judgment)
        if rank is not None:
            total += Fraction(1, rank)
    return total / len(judgments)


def aggregate(
    judgments: Sequence[QueryJudgment], ks: Sequence[int] = EVAL_KS
) -> dict[str, dict[int, Fraction] | Fraction]:
    """Exact suite-level means for every metric at every k."""
    if not judgments:
        raise EmptyJudgmentSet("cannot aggregate zero judgments")
    n = len(judgments)
    means: dict[str, dict[int, Fraction] | Fraction] = {
        "hit": {}, "precision": {}, "recall": {},
    }
    for k in ks:
        means["hit"][k] = sum(hit_at_k(j, k) for j in judgments) / n
        means["precision"][k] = sum(precision_at_k(j, k) for j in judgments) / n
        means["recall"][k] = sum(recall_at_k(j, k) for j in judgments) / n
    means["mrr"] = mrr(judgments)
    return means


@dataclass(frozen=True)
class PerQueryRow:
    query: str
    gold_task_ids: frozenset[str]
    returned: tuple[str, ...]
    first_rank: int | None
    failure_tag: str | None
    mode: str


@dataclass(frozen=True)
class MetricsReport:
    hit_at: dict[int, float]
    precision_at: dict[int, float]
    recall_at: dict[int, float]
    mrr: float
    accuracy_rate: float
    n_queries: int
    per_query: tuple[PerQueryRow, ...] = ()
    failure_tags: dict[str, int] = field(default_factory=dict)


def _empty_report(ks: Sequence[int]) -> MetricsReport:
    zero = {k: 0.0 for k in ks}
    return MetricsReport(
        hit_at=dict(zero),
        precision_at=dict(zero),
        recall_at=dict(zero),
        mrr=0.0,
        accuracy_rate=0.0,
        n_queries=0,
    )


def split_suite(
    suite: Sequence[TestCase], train_fraction: float = 0.8, seed: int = 0
) -> tuple[list[TestCase], list[TestCase]]:
    """Seeded shuffle split; both sides are guaranteed non-empty."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if len(suite) < 2:
        raise DegenerateSplit(f"need at least 2 cases to split, got {len(suite)}")
    indices = list(range(len(suite)))
    random.Random(seed).shuffle(indices)
    n_train = int(round(len(suite) * train_fraction))
    if n_train == 0 or n_train == len(suite):
        raise DegenerateSplit(
            f"fraction {train_fraction} leaves an empty side for {len(suite)} cases"
        )
    train = [suite[i] for i in indices[:n_train]]
    test = [suite[i] for i in indices[n_train:]]
    return train, test


def _metadata_tokens(catalog: TaskCatalog) -> frozenset[str]:
    tokens: set[str] = set()
    for task in catalog:
        tokens.update(tokenize(task.name))
        tokens.update(tokenize(task.help_text))
        tokens.update(tokenize(task.description))
    return frozenset(tokens)


def _tag_failure(
    case: TestCase,
    judgment: QueryJudgment,
    retriever: TaskRetriever,
    metadata_tokens: frozenset[str],
    shortlist,
    degraded: frozenset[str],
    epsilon: float,
) -> str:
    """Pick one advisory tag for a query whose top-5 missed every gold task.

    Ordered most-specific-first: a query inert to every signal source is a
    lexical gap even though it also has no lexicon coverage.
    """
    query_tokens = tokenize(case.query)
    in_lexicon = any(retriever.lexicon_.has_word(t) for t in query_tokens)
    in_metadata = any(t in metadata_tokens for t in query_tokens)
    if not in_metadata and not in_lexicon:
        return "lexical_gap"
    if not in_lexicon:
        return "missing_rationale"
    if len(shortlist) > 0:
        top_total = shortlist[0].total
        near_non_gold = [
            c
            for c in shortlist
            if c.total >= top_total - epsilon and c.task_id not in judgment.gold_task_ids
        ]
        if len(near_non_gold) >= 2:
            return "ambiguous_query"
    if "emb" in degraded:
        return "embedding_failure"
    return "other"


def _evaluate(
    cases: Sequence[TestCase],
    retriever: TaskRetriever,
    ks: Sequence[int],
    epsilon: float,
) -> MetricsReport:
    if not cases:
        return _empty_report(ks)
    metadata = _metadata_tokens(retriever.catalog_)
    judgments: list[QueryJudgment] = []
    rows: list[PerQueryRow] = []
    tags: dict[str, int] = {}
    for case in cases:
        result = retriever.rank(case.query)
        judgment = QueryJudgment(
            query=case.query,
            gold_task_ids=case.gold_task_ids,
            returned=result.task_ids,
        )
        judgments.append(judgment)
        tag: str | None = None
        if hit_at_k(judgment, ACCURACY_K) == 0:
            tag = _tag_failure(
                case, judgment, retriever, metadata,
                result.shortlist, result.degraded_signals, epsilon,
            )
            tags[tag] = tags.get(tag, 0) + 1
        rows.append(
            PerQueryRow(
                query=case.query,
                gold_task_ids=judgment.gold_task_ids,
                returned=judgment.returned,
                first_rank=first_gold_rank(judgment),
                failure_tag=tag,
                mode=result.mode,
            )
        )
    means = aggregate(judgments, ks)
    recall_at = {k: float(means["recall"][k]) for k in ks}
    return MetricsReport(
        hit_at={k: float(means["hit"][k]) for k in ks},
        precision_at={k: float(means["precision"][k]) for k in ks},
        recall_at=recall_at,
        mrr=float(means["mrr"]),
        accuracy_rate=recall_at.get(ACCURACY_K, float(recall_at_mean(judgments))),
        n_queries=len(judgments),
        per_query=tuple(rows),
        failure_tags=tags,
    )


def recall_at_mean(judgments: Sequence[QueryJudgment], k: int = ACCURACY_K) -> Fraction:
    if not judgments:
        raise EmptyJudgmentSet("cannot aggregate zero judgments")
    return sum(recall_at_k(j, k) for j in judgments) / len(judgments)


def evaluate_suite(
    test: Sequence[TestCase],
    retriever: TaskRetriever,
    ks: Sequence[int] = EVAL_KS,
    ambiguity_epsilon: float = AMBIGUITY_EPSILON,
) -> MetricsReport:
    """Run the fitted engine over held-out cases and aggregate the metrics.

    Queries whose top-5 contains no gold task receive one advisory failure
    tag describing the most likely cause.
    """
    if not test:
        raise EmptyJudgmentSet("evaluation needs at least one test case")
    return _evaluate(test, retriever, ks, ambiguity_epsilon)


def adaptation_scenario(
    catalog: TaskCatalog,
    suite: Sequence[TestCase],
    new_tasks: Iterable[Task],
    new_cases: Sequence[TestCase],
    retriever: TaskRetriever,
    ks: Sequence[int] = EVAL_KS,
) -> tuple[MetricsReport, MetricsReport]:
    """Measure new-task queries before and after their test cases exist.

    Both runs see the extended catalog; only the "after" run mines the new
    cases into the lexicon (and example pool). The new cases themselves are
    the probe queries.
    """
    extended = catalog.extended(new_tasks)
    base_suite = tuple(suite)
    probes = tuple(new_cases)
    before = clone(retriever).fit(extended, base_suite)
    after = clone(retriever).fit(extended, base_suite + probes)
    before_report = _evaluate(probes, before, ks, AMBIGUITY_EPSILON)
    after_report = _evaluate(probes, after, ks, AMBIGUITY_EPSILON)
    return before_report, after_report


def save_report(report: MetricsReport, path: str | Path) -> None:
    """Line-oriented dump; floats use repr so a reload is bit-identical."""
    path = Path(path)
    lines = ["# evaluation report v1", f"n_queries\t{report.n_queries}"]
    for label, table in (
        ("hit", report.hit_at),
        ("precision", report.precision_at),
        ("recall", report.recall_at),
    ):
        for k in sorted(table):
            lines.append(f"{label}\t{k}\t{table[k]!r}")
    lines.append(f"mrr\t{report.mrr!r}")
    lines.append(f"accuracy_rate\t{report.accuracy_rate!r}")
    for tag in sorted(report.failure_tags):
        lines.append(f"failure\t{tag}\t{report.failure_tags[tag]}")
    for row in report.per_query:
        gold = ",".join(sorted(row.gold_task_ids))
        returned = ",".join(row.returned)
        rank = "-" if row.first_rank is None else str(row.first_rank)
        tag = "-" if row.failure_tag is None else row.failure_tag
        lines.append(f"row\t{row.query}\t{gold}\t{returned}\t{rank}\t{tag}\t{row.mode}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_report(path: str | Path) -> MetricsReport:
    path = Path(path)
    hit_at: dict[int, float] = {}
    precision_at: dict[int, float] = {}
    recall_at: dict[int, float] = {}
    mrr_value: float | None = None
    accuracy: float | None = None
    n_queries: int | None = None
    tags: dict[str, int] = {}
    rows: list[PerQueryRow] = []
    tables = {"hit": hit_at, "precision": precision_at, "recall": recall_at}
    with path.open(encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            kind = parts[0]
            try:
                if kind == "n_queries" and len(parts) == 2:
                    n_queries = int(parts[1])
                elif kind in tables and len(parts) == 3:
                    tables[kind][int(parts[1])] = float(parts[2])
                elif kind == "mrr" and len(parts) == 2:
                    mrr_value = float(parts[1])
                elif kind == "accuracy_rate" and len(parts) == 2:
                    accuracy = float(parts[1])
                elif kind == "failure" and len(parts) == 3:
                    tags[parts[1]] = int(parts[2])
                elif kind == "row" and len(parts) == 7:
                    _, query, gold, returned, rank, tag, mode = parts
                    rows.append(
                        PerQueryRow(
                            query=query,
                            gold_task_ids=frozenset(g for g in gold.split(",") if g),
                            returned=tuple(r for r in returned.split(",") if r),
                            first_rank=None if rank == "-" else int(rank),
                            failure_tag=None if tag == "-" else tag,
                            mode=mode,
                        )
                    )
                else:
                    raise ValueError(f"unrecognized record {kind!r}")
            except ValueError as exc:
                raise ParseError(path, line_no, str(exc)) from None
    if n_queries is None or mrr_value is None or accuracy is None:
        raise ParseError(path, 0, "report missing n_queries, mrr, or accuracy_rate")
    return MetricsReport(
        hit_at=hit_at,
        precision_at=precision_at,
        recall_at=recall_at,
        mrr=mrr_value,
        accuracy_rate=accuracy,
        n_queries=n_queries,
        per_query=tuple(rows),
        failure_tags=tags,
    )


def format_summary(report: MetricsReport) -> str:
    """Human-readable block for terminal output."""
    lines = [f"queries evaluated: {report.n_queries}"]
    ks = sorted(report.hit_at)
    lines.append(f"{'k':>3}  {'hit':>8}  {'precision':>9}  {'recall':>8}")
    for k in ks:
        lines.append(
            f"{k:>3}  {report.hit_at[k]:>8.4f}  {report.precision_at[k]:>9.4f}"
            f"  {report.recall_at[k]:>8.4f}"
        )
    lines.append(f"mrr: {report.mrr:.4f}")
    lines.append(f"accuracy rate (recall@{ACCURACY_K}): {report.accuracy_rate:.4f}")
    if report.failure_tags:
        tagged = ", ".join(
            f"{tag}={count}" for tag, count in sorted(report.failure_tags.items())
        )
        lines.append(f"failure tags: {tagged}")
    return "\n".join(lines)
