"""Second stage: LLM re-ranking locked to the shortlist.

The model sees the query, the numbered shortlist, and up to three similar
solved queries, and must answer with a JSON array referencing shortlist
positions. Validation drops anything the shortlist cannot vouch for, so no
model output can ever surface a task that was not already a candidate. Any
client failure falls back to pre-filter order; callers never see an error.
"""

from __future__ import annotations

import json
import os
import re
import urllib.request
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

from .catalog import TaskCatalog
from .errors import EmptyShortlist, MalformedResponse
from .lexicon import TestCase
from .prefilter import Shortlist
from .textproc import jaccard, overlap, tokenize

SHORTLIST_CONSTRAINT = "You must select ONLY from the provided shortlist."

INSTRUCTION_TEXT = (
    "You are ranking catalog tasks for a user query.\n"
    + SHORTLIST_CONSTRAINT
    + " Do not suggest tasks not in this list.\n"
    + "Rank the most relevant tasks first.\n"
    + 'Respond with a JSON array of objects, each with fields "rank" (integer, 1 = most'
    + ' relevant), "idx" (integer position in the shortlist), "task_name" (string, copied'
    + ' exactly from the shortlist), and "reason" (string).'
)

SCHEMA_FOOTER = "Output only the JSON array, nothing else."

MODE_RERANKED = "reranked"
MODE_DEGRADED = "degraded_prefilter"

DEFAULT_MAX_EXAMPLES = 3
DEFAULT_TIMEOUT = 10.0

_FENCE_RE = re.compile(r"^```[a-zA-Z0-9]*\n(.*)\n```$", re.DOTALL)


@dataclass(frozen=True)
class ExampleRendering:
    """A solved query shown in-context: query, gold task names, rationale."""

    query: str
    gold_names: tuple[str, ...]
    rationale: str


@dataclass(frozen=True)
class PromptBundle:
    query: str
    shortlist_view: tuple[tuple[int, str, str], ...]
    examples: tuple[ExampleRendering, ...]
    instruction_text: str

    def render(self) -> str:
        lines = [self.instruction_text, "", f"QUERY: {self.query}", "", "SHORTLIST:"]
        for idx, name, help_text in self.shortlist_view:
            lines.append(f"{idx}. {name} — {help_text}")
        if self.examples:
            lines.append("")
            lines.append("EXAMPLES:")
            for example in self.examples:
                names = ", ".join(example.gold_names)
                lines.append(
                    f'- query: "{example.query}" -> {names} (because {example.rationale})'
                )
        lines.append("")
        lines.append(SCHEMA_FOOTER)
        return "\n".join(lines)


@dataclass(frozen=True)
class RerankEntry:
    rank: int
    idx: int
    task_name: str
    reason: str


@dataclass(frozen=True)
class RerankResult:
    entries: tuple[RerankEntry, ...]
    dropped_count: int
    mode: str

    def task_names(self) -> tuple[str, ...]:
        return tuple(entry.task_name for entry in self.entries)


class LLMClient(Protocol):
    def complete(self, prompt: str) -> str: ...


def select_examples(
    query: str, suite: Sequence[TestCase], max_n: int = DEFAULT_MAX_EXAMPLES
) -> list[TestCase]:
    """Most query-similar suite cases by Jaccard; zero-similarity excluded."""
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    query_tokens = tokenize(query)
    scored = []
    for position, case in enumerate(suite):
        similarity = jaccard(query_tokens, tokenize(case.query))
        if similarity > 0.0:
            scored.append((-similarity, position, case))
    scored.sort(key=lambda item: (item[0], item[1]))
    return [case for _, _, case in scored[:max_n]]


def render_example(case: TestCase, catalog: TaskCatalog | None = None) -> ExampleRendering:
    """Resolve gold ids to display names; unknown ids fall back to the raw id."""
    names = []
    for task_id in sorted(case.gold_task_ids):
        if catalog is not None and task_id in catalog:
            names.append(catalog.get(task_id).name)
        else:
            names.append(task_id)
    return ExampleRendering(
        query=case.query, gold_names=tuple(names), rationale=case.rationale
    )


def build_prompt(
    query: str,
    shortlist: Shortlist,
    examples: Sequence[TestCase | ExampleRendering] = (),
    catalog: TaskCatalog | None = None,
) -> PromptBundle:
    if len(shortlist) == 0:
        raise EmptyShortlist("cannot build a prompt over an empty shortlist")
    rendered = tuple(
        example if isinstance(example, ExampleRendering) else render_example(example, catalog)
        for example in examples
    )
    view = tuple(
        (idx, candidate.task.name, candidate.task.help_text)
        for idx, candidate in enumerate(shortlist)
    )
    return PromptBundle(
        query=query, shortlist_view=view, examples=rendered, instruction_text=INSTRUCTION_TEXT
    )


def _strip_fences(raw: str) -> str:
    text = raw.strip()
    match = _FENCE_RE.match(text)
    return match.group(1) if match else text


def _well_formed_entry(item: object) -> bool:
    if not isinstance(item, dict):
        return False
    rank = item.get("rank")
    idx = item.get("idx")
    # bool passes isinstance(int) in Python; it is not an integer rank here.
    if isinstance(rank, bool) or not isinstance(rank, int):
        return False
    if isinstance(idx, bool) or not isinstance(idx, int):
        return False
    return isinstance(item.get("task_name"), str) and isinstance(item.get("reason"), str)


def parse_and_validate(raw: str, shortlist: Shortlist) -> tuple[list[RerankEntry], int]:
    """Apply the four validation checks; survivors come back sorted by rank.

    Checks: (1) the whole response must decode to the declared schema, else
    MalformedResponse; (2) out-of-range idx dropped; (3) task_name must equal
    the shortlist name at idx, byte for byte; (4) duplicate idx keeps the
    lowest rank. Duplicate rank values keep the earliest entry.
    """
    try:
        payload = json.loads(_strip_fences(raw))
    except (json.JSONDecodeError, TypeError) as exc:
        raise MalformedResponse(f"not valid JSON: {exc}") from exc
    if not isinstance(payload, list) or not all(_well_formed_entry(i) for i in payload):
        raise MalformedResponse("response is not an array of well-typed rank entries")

    dropped = 0
    survivors: list[RerankEntry] = []
    best_by_idx: dict[int, RerankEntry] = {}
    for item in payload:
        entry = RerankEntry(
            rank=item["rank"], idx=item["idx"],
            task_name=item["task_name"], reason=item["reason"],
        )
        if not 0 <= entry.idx < len(shortlist):
            dropped += 1
            continue
        if entry.task_name != shortlist[entry.idx].task.name:
            dropped += 1
            continue
        held = best_by_idx.get(entry.idx)
        if held is not None:
            dropped += 1
            if entry.rank < held.rank:
                survivors[survivors.index(held)] = entry
                best_by_idx[entry.idx] = entry
            continue
        best_by_idx[entry.idx] = entry
        survivors.append(entry)

    seen_ranks: set[int] = set()
    unique: list[RerankEntry] = []
    for entry in survivors:
        if entry.rank in seen_ranks:
            dropped += 1
            continue
        seen_ranks.add(entry.rank)
        unique.append(entry)
    unique.sort(key=lambda entry: entry.rank)
    return unique, dropped


class OverlapMockClient:
    """Offline stand-in: ranks the shortlist by lexical overlap with the query.

    It reads the same prompt a real model would, so the full render/parse
    path is exercised. Ties keep shortlist order, preserving the pre-filter's
    judgment when the mock has no opinion.
    """

    _QUERY_RE = re.compile(r"^QUERY: (.*)$", re.MULTILINE)
    _ITEM_RE = re.compile(r"^(\d+)\. (.*?) — (.*)$", re.MULTILINE)

    def complete(self, prompt: str) -> str:
        query_match = self._QUERY_RE.search(prompt)
        query_tokens = tokenize(query_match.group(1)) if query_match else frozenset()
        entries = []
        for match in self._ITEM_RE.finditer(prompt):
            idx, name, help_text = int(match.group(1)), match.group(2), match.group(3)
            score = overlap(query_tokens, tokenize(f"{name} {help_text}"))
            entries.append((-score, idx, name, score))
        entries.sort(key=lambda item: (item[0], item[1]))
        payload = [
            {
                "rank": position + 1,
                "idx": idx,
                "task_name": name,
                "reason": f"overlap {score:.3f}",
            }
            for position, (_, idx, name, score) in enumerate(entries)
        ]
        return json.dumps(payload)


class RemoteLLMClient:
    """HTTP completion client; always requests temperature 0.0."""

    def __init__(
        self,
        endpoint: str,
        api_key: str = "",
        model: str = "default",
        timeout: float = DEFAULT_TIMEOUT,
    ):
        self.endpoint = endpoint
        self.api_key = api_key
        self.model = model
        self.timeout = timeout

    def complete(self, prompt: str) -> str:
        body = json.dumps(
            {"model": self.model, "prompt": prompt, "temperature": 0.0}
        ).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        request = urllib.request.Request(self.endpoint, data=body, headers=headers)
        with urllib.request.urlopen(request, timeout=self.timeout) as response:
            payload = json.loads(response.read().decode("utf-8"))
        if isinstance(payload, dict):
            if isinstance(payload.get("text"), str):
                return payload["text"]
            choices = payload.get("choices")
            if isinstance(choices, list) and choices and isinstance(choices[0], dict):
                first = choices[0]
                if isinstance(first.get("text"), str):
                    return first["text"]
                message = first.get("message")
                if isinstance(message, dict) and isinstance(message.get("content"), str):
                    return message["content"]
        raise MalformedResponse("completion endpoint returned no text field")


def client_from_env(env: Mapping[str, str] | None = None) -> LLMClient:
    """Remote client when TF_LLM_ENDPOINT is set, offline mock otherwise."""
    env = os.environ if env is None else env
    endpoint = env.get("TF_LLM_ENDPOINT", "").strip()
    if endpoint:
        return RemoteLLMClient(
            endpoint=endpoint,
            api_key=env.get("TF_LLM_API_KEY", ""),
            model=env.get("TF_LLM_MODEL", "default"),
        )
    return OverlapMockClient()


def _degraded(shortlist: Shortlist, dropped: int) -> RerankResult:
    entries = tuple(
        RerankEntry(
            rank=idx + 1,
            idx=idx,
            task_name=candidate.task.name,
            reason="pre-filter order (re-rank unavailable)",
        )
        for idx, candidate in enumerate(shortlist)
    )
    return RerankResult(entries=entries, dropped_count=dropped, mode=MODE_DEGRADED)


def rerank(
    query: str,
    shortlist: Shortlist,
    suite: Sequence[TestCase],
    client: LLMClient,
    catalog: TaskCatalog | None = None,
    max_examples: int = DEFAULT_MAX_EXAMPLES,
) -> RerankResult:
    """Re-rank the shortlist; every failure path folds into pre-filter order."""
    if len(shortlist) == 0:
        raise EmptyShortlist("cannot rerank an empty shortlist")
    examples = select_examples(query, suite, max_examples) if suite else []
    prompt = build_prompt(query, shortlist, examples, catalog).render()
    try:
        raw = client.complete(prompt)
        entries, dropped = parse_and_validate(raw, shortlist)
    except Exception:
        # Includes MalformedResponse, transport errors, and anything a hostile
        # client can throw; degradation is the contract, not an error path.
        return _degraded(shortlist, 0)
    if not entries:
        return _degraded(shortlist, dropped)
    return RerankResult(entries=tuple(entries), dropped_count=dropped, mode=MODE_RERANKED)
