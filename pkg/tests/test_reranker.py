"""Prompt construction, response validation, and re-rank fallback tests."""

from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from taskfinder.catalog import Task, TaskCatalog
from taskfinder.errors import EmptyShortlist, MalformedResponse
from taskfinder.lexicon import TestCase
from taskfinder.prefilter import ScoredTask, Shortlist
from taskfinder.reranker import (
    INSTRUCTION_TEXT,
    MODE_DEGRADED,
    MODE_RERANKED,
    SCHEMA_FOOTER,
    SHORTLIST_CONSTRAINT,
    ExampleRendering,
    OverlapMockClient,
    RemoteLLMClient,
    build_prompt,
    client_from_env,
    parse_and_validate,
    render_example,
    rerank,
    select_examples,
)

from .helpers import (
    AdversarialClient,
    FakeResponse,
    EchoClient,
    FailingClient,
    ReversingClient,
    StaticClient,
)
from .oracles import select_examples_ref

GOLDEN_PROMPT = Path(__file__).parent / "data" / "prompt_golden.txt"


def case(query, gold="t1", rationale="because"):
    gold_ids = {gold} if isinstance(gold, str) else set(gold)
    return TestCase(query=query, gold_task_ids=gold_ids, rationale=rationale)


def make_shortlist(names_and_help, query="q", k=15):
    candidates = []
    for position, (name, help_text) in enumerate(names_and_help):
        task = Task(id=f"id{position}", name=name, help_text=help_text)
        candidates.append(
            ScoredTask(
                task=task,
                total=float(len(names_and_help) - position),
                s_lex=0.0,
                s_rat=0.0,
                s_emb=0.0,
                s_typo=0.0,
            )
        )
    return Shortlist(query=query, candidates=tuple(candidates), k=k)


def valid_response(shortlist, order=None):
    order = list(range(len(shortlist))) if order is None else order
    return json.dumps(
        [
            {
                "rank": position + 1,
                "idx": idx,
                "task_name": shortlist[idx].task.name,
                "reason": "r",
            }
            for position, idx in enumerate(order)
        ]
    )


@pytest.fixture
def shortlist():
    return make_shortlist(
        [
            ("Attendance Monitoring", "Track daily attendance"),
            ("Meal Counts", "Record meals served"),
            ("Home Visits", "Log family home visits"),
        ]
    )


def similarity_suite():
    return [
        case("alpha beta gamma delta epsilon zeta"),
        case("alpha beta gamma eta theta iota"),
        case("alpha beta gamma k1 k2 k3 k4 k5 k6 k7"),
        case("omega psi chi"),
        case("alpha bravo charlie"),
    ]


def test_select_examples_identical_query_first():
    suite = [case("other thing"), case("track attendance")]
    assert select_examples("track attendance", suite)[0] is suite[1]


def test_select_examples_zero_similarity_excluded():
    suite = [case("meal counts"), case("bus routes")]
    assert select_examples("immunization records", suite) == []


def test_select_examples_graded_similarities():
    suite = similarity_suite()
    # Similarities vs "alpha beta gamma": 0.5, 0.5, 0.3, 0.0, 0.2.
    chosen = select_examples("alpha beta gamma", suite, max_n=3)
    assert chosen == [suite[0], suite[1], suite[2]]
    ref = select_examples_ref("alpha beta gamma", [c.query for c in suite], 3)
    assert [suite.index(c) for c in chosen] == ref == [0, 1, 2]


def test_select_examples_max_n():
    suite = similarity_suite()
    assert select_examples("alpha beta gamma", suite, max_n=2) == [suite[0], suite[1]]
    assert select_examples("alpha beta gamma", suite, max_n=1) == [suite[0]]
    with pytest.raises(ValueError):
        select_examples("alpha beta gamma", suite, max_n=0)


def test_select_examples_tie_keeps_suite_order():
    first = case("alpha beta gamma delta epsilon zeta")
    second = case("alpha beta gamma eta theta iota")
    assert select_examples("alpha beta gamma", [first, second], 2) == [first, second]
    assert select_examples("alpha beta gamma", [second, first], 2) == [second, first]


def test_select_examples_bounded_by_three():
    rng = random.Random(3)
    vocab = ["alpha", "beta", "gamma", "delta", "milk", "forms", "bus"]
    for _ in range(25):
        suite = [
            case(" ".join(rng.sample(vocab, rng.randrange(1, 5))))
            for _ in range(rng.randrange(0, 8))
        ]
        chosen = select_examples("alpha beta", suite)
        assert len(chosen) <= min(3, len(suite))


def test_render_example_resolves_names(asq_catalog):
    rendering = render_example(
        case("ASQ", gold={"se_assessment", "dev_screening"}, rationale="ages and stages"),
        asq_catalog,
    )
    assert rendering.gold_names == ("Developmental Screening", "Social Emotional Assessment")
    assert rendering.query == "ASQ"


def test_render_example_unknown_id_falls_back():
    rendering = render_example(case("q", gold="ghost_task"))
    assert rendering.gold_names == ("ghost_task",)


def test_build_prompt_deterministic(shortlist):
    suite = [case("attendance tracking")]
    first = build_prompt("attendance", shortlist, suite).render()
    second = build_prompt("attendance", shortlist, suite).render()
    assert first == second


def test_build_prompt_omits_empty_examples_block(shortlist):
    rendered = build_prompt("attendance", shortlist).render()
    assert "EXAMPLES:" not in rendered
    assert "QUERY: attendance" in rendered
    assert SHORTLIST_CONSTRAINT in rendered
    assert SCHEMA_FOOTER in rendered
    assert rendered.startswith(INSTRUCTION_TEXT)


def test_build_prompt_fifteen_contiguous_lines():
    shortlist = make_shortlist([(f"Task {i}", f"help {i}") for i in range(15)])
    rendered = build_prompt("q", shortlist).render()
    lines = rendered.splitlines()
    numbered = [line for line in lines if line and line[0].isdigit()]
    assert len(numbered) == 15
    for idx in range(15):
        assert f"{idx}. Task {idx} — help {idx}" in lines


def test_build_prompt_empty_shortlist_rejected():
    empty = Shortlist(query="q", candidates=(), k=15)
    with pytest.raises(EmptyShortlist):
        build_prompt("q", empty)


def test_build_prompt_accepts_prerendered_examples(shortlist):
    rendering = ExampleRendering(query="q", gold_names=("A",), rationale="r")
    bundle = build_prompt("attendance", shortlist, [rendering])
    assert bundle.examples == (rendering,)


def test_build_prompt_matches_golden_file(asq_catalog):
    shortlist = Shortlist(
        query="ASQ",
        candidates=tuple(
            ScoredTask(
                task=task, total=2.0 - i, s_lex=2.0 - i, s_rat=0.0, s_emb=0.0, s_typo=0.0
            )
            for i, task in enumerate(asq_catalog)
        ),
        k=15,
    )
    asq = case(
        "ASQ",
        gold={"dev_screening", "se_assessment"},
        rationale="Ages and Stages Questionnaires for early childhood development",
    )
    rendered = build_prompt("ASQ", shortlist, [asq], asq_catalog).render()
    assert rendered == GOLDEN_PROMPT.read_text(encoding="utf-8")


def test_parse_valid_response(shortlist):
    entries, dropped = parse_and_validate(valid_response(shortlist, [2, 0, 1]), shortlist)
    assert dropped == 0
    assert [e.idx for e in entries] == [2, 0, 1]
    assert [e.rank for e in entries] == [1, 2, 3]
    assert entries[0].task_name == "Home Visits"


def test_parse_empty_array(shortlist):
    assert parse_and_validate("[]", shortlist) == ([], 0)


def test_parse_strips_markdown_fences(shortlist):
    fenced = f"```json\n{valid_response(shortlist)}\n```"
    entries, dropped = parse_and_validate(fenced, shortlist)
    assert len(entries) == 3
    assert dropped == 0


@pytest.mark.parametrize(
    "raw",
    [
        "this is prose, not JSON",
        "{\"rank\": 1}",
        "[1, 2, 3]",
        '[{"rank": 1, "idx": 0}]',
        '[{"rank": "first", "idx": 0, "task_name": "Attendance Monitoring", "reason": "r"}]',
        '[{"rank": 1.5, "idx": 0, "task_name": "Attendance Monitoring", "reason": "r"}]',
        '[{"rank": true, "idx": 0, "task_name": "Attendance Monitoring", "reason": "r"}]',
        '[{"rank": 1, "idx": "0", "task_name": "Attendance Monitoring", "reason": "r"}]',
        '[{"rank": 1, "idx": 0, "task_name": 7, "reason": "r"}]',
        '[{"rank": 1, "idx": 0, "task_name": "Attendance Monitoring", "reason": null}]',
    ],
)
def test_parse_malformed_payloads(shortlist, raw):
    with pytest.raises(MalformedResponse):
        parse_and_validate(raw, shortlist)


def test_parse_drops_out_of_range_idx(shortlist):
    raw = json.dumps(
        [
            {"rank": 1, "idx": 5, "task_name": "Attendance Monitoring", "reason": "r"},
            {"rank": 2, "idx": -1, "task_name": "Meal Counts", "reason": "r"},
            {"rank": 3, "idx": 0, "task_name": "Attendance Monitoring", "reason": "r"},
        ]
    )
    entries, dropped = parse_and_validate(raw, shortlist)
    assert [e.idx for e in entries] == [0]
    assert dropped == 2


def test_parse_drops_name_mismatch(shortlist):
    raw = json.dumps(
        [
            {"rank": 1, "idx": 0, "task_name": "Meal Counts", "reason": "wrong slot"},
            {"rank": 2, "idx": 1, "task_name": "Meal Counts", "reason": "right slot"},
        ]
    )
    entries, dropped = parse_and_validate(raw, shortlist)
    assert [e.idx for e in entries] == [1]
    assert dropped == 1


def test_parse_drops_hallucinated_name(shortlist):
    raw = json.dumps(
        [{"rank": 1, "idx": 0, "task_name": "Invented Task", "reason": "lie"}]
    )
    entries, dropped = parse_and_validate(raw, shortlist)
    assert entries == []
    assert dropped == 1


def test_parse_duplicate_idx_keeps_lowest_rank(shortlist):
    raw = json.dumps(
        [
            {"rank": 3, "idx": 1, "task_name": "Meal Counts", "reason": "later"},
            {"rank": 1, "idx": 1, "task_name": "Meal Counts", "reason": "winner"},
        ]
    )
    entries, dropped = parse_and_validate(raw, shortlist)
    assert len(entries) == 1
    assert entries[0].rank == 1
    assert entries[0].reason == "winner"
    assert dropped == 1
    # Same idx arriving with the lower rank first: the later one is dropped.
    raw = json.dumps(
        [
            {"rank": 1, "idx": 1, "task_name": "Meal Counts", "reason": "winner"},
            {"rank": 3, "idx": 1, "task_name": "Meal Counts", "reason": "later"},
        ]
    )
    entries, dropped = parse_and_validate(raw, shortlist)
    assert entries[0].reason == "winner"
    assert dropped == 1


def test_parse_duplicate_rank_keeps_earliest(shortlist):
    raw = json.dumps(
        [
            {"rank": 1, "idx": 0, "task_name": "Attendance Monitoring", "reason": "first"},
            {"rank": 1, "idx": 2, "task_name": "Home Visits", "reason": "second"},
        ]
    )
    entries, dropped = parse_and_validate(raw, shortlist)
    assert [e.idx for e in entries] == [0]
    assert dropped == 1


def test_parse_sorts_by_rank(shortlist):
    raw = json.dumps(
        [
            {"rank": 2, "idx": 0, "task_name": "Attendance Monitoring", "reason": "r"},
            {"rank": 1, "idx": 2, "task_name": "Home Visits", "reason": "r"},
        ]
    )
    entries, _ = parse_and_validate(raw, shortlist)
    assert [e.rank for e in entries] == [1, 2]
    assert [e.idx for e in entries] == [2, 0]


def test_mock_client_prefers_overlap(shortlist):
    prompt = build_prompt("meal counts", shortlist).render()
    entries, dropped = parse_and_validate(OverlapMockClient().complete(prompt), shortlist)
    assert dropped == 0
    assert entries[0].task_name == "Meal Counts"
    assert len(entries) == len(shortlist)


def test_mock_client_tie_keeps_shortlist_order(shortlist):
    prompt = build_prompt("zzz unrelated zzz", shortlist).render()
    entries, _ = parse_and_validate(OverlapMockClient().complete(prompt), shortlist)
    assert [e.idx for e in entries] == [0, 1, 2]


def test_rerank_reversed(shortlist):
    result = rerank("q", shortlist, [], ReversingClient())
    assert result.mode == MODE_RERANKED
    assert [e.idx for e in result.entries] == [2, 1, 0]
    assert result.dropped_count == 0


def test_rerank_identity_echo(shortlist):
    result = rerank("q", shortlist, [], EchoClient())
    assert result.mode == MODE_RERANKED
    assert [e.idx for e in result.entries] == [0, 1, 2]


def test_rerank_client_timeout_degrades(shortlist):
    result = rerank("q", shortlist, [], FailingClient())
    assert result.mode == MODE_DEGRADED
    assert [e.idx for e in result.entries] == [0, 1, 2]
    assert [e.rank for e in result.entries] == [1, 2, 3]
    assert result.task_names() == tuple(c.task.name for c in shortlist)


def test_rerank_garbage_degrades(shortlist):
    result = rerank("q", shortlist, [], StaticClient("sorry, I cannot do that"))
    assert result.mode == MODE_DEGRADED
    assert [e.idx for e in result.entries] == [0, 1, 2]


def test_rerank_empty_array_degrades(shortlist):
    result = rerank("q", shortlist, [], StaticClient("[]"))
    assert result.mode == MODE_DEGRADED


def test_rerank_all_hallucinated_degrades(shortlist):
    raw = json.dumps(
        [
            {"rank": 1, "idx": 0, "task_name": "Fake One", "reason": "x"},
            {"rank": 2, "idx": 1, "task_name": "Fake Two", "reason": "x"},
        ]
    )
    result = rerank("q", shortlist, [], StaticClient(raw))
    assert result.mode == MODE_DEGRADED
    assert result.dropped_count == 2
    assert result.task_names() == tuple(c.task.name for c in shortlist)


def test_rerank_never_raises_on_hostile_clients(shortlist):
    class RaisesWeird:
        def complete(self, prompt):
            raise KeyError("weird")

    class ReturnsNone:
        def complete(self, prompt):
            return None

    for client in (RaisesWeird(), ReturnsNone()):
        result = rerank("q", shortlist, [], client)
        assert result.mode == MODE_DEGRADED


def test_rerank_empty_shortlist_raises():
    empty = Shortlist(query="q", candidates=(), k=15)
    with pytest.raises(EmptyShortlist):
        rerank("q", empty, [], EchoClient())


def test_rerank_passes_examples_to_prompt(shortlist):
    client = StaticClient(valid_response(shortlist))
    suite = [case("meal counts please", rationale="meals get counted")]
    rerank("meal counts", shortlist, suite, client)
    assert "EXAMPLES:" in client.prompts[0]
    assert "meals get counted" in client.prompts[0]


def test_rerank_adversarial_sanity(shortlist):
    rng = random.Random(99)
    client = AdversarialClient(rng)
    genuine = {c.task.name for c in shortlist}
    for _ in range(50):
        result = rerank("q", shortlist, [], client)
        assert set(result.task_names()) <= genuine


def test_remote_client_temperature_zero(monkeypatch):
    seen = {}

    def fake_urlopen(request, timeout=None):
        seen["body"] = json.loads(request.data.decode("utf-8"))
        seen["auth"] = request.get_header("Authorization")
        return FakeResponse(json.dumps({"text": "[]"}).encode("utf-8"))

    monkeypatch.setattr("urllib.request.urlopen", fake_urlopen)
    client = RemoteLLMClient(endpoint="https://llm.example", api_key="k", model="mini")
    assert client.complete("PROMPT") == "[]"
    assert seen["body"]["temperature"] == 0.0
    assert seen["body"]["model"] == "mini"
    assert seen["body"]["prompt"] == "PROMPT"
    assert seen["auth"] == "Bearer k"


@pytest.mark.parametrize(
    "payload,expected",
    [
        ({"text": "answer"}, "answer"),
        ({"choices": [{"text": "choice answer"}]}, "choice answer"),
        ({"choices": [{"message": {"content": "chat answer"}}]}, "chat answer"),
    ],
)
def test_remote_client_response_shapes(monkeypatch, payload, expected):
    monkeypatch.setattr(
        "urllib.request.urlopen",
        lambda request, timeout=None: FakeResponse(json.dumps(payload).encode("utf-8")),
    )
    client = RemoteLLMClient(endpoint="https://llm.example")
    assert client.complete("p") == expected


def test_remote_client_missing_text(monkeypatch):
    monkeypatch.setattr(
        "urllib.request.urlopen",
        lambda request, timeout=None: FakeResponse(b'{"status": "ok"}'),
    )
    client = RemoteLLMClient(endpoint="https://llm.example")
    with pytest.raises(MalformedResponse):
        client.complete("p")


def test_client_from_env():
    assert isinstance(client_from_env(env={}), OverlapMockClient)
    remote = client_from_env(
        env={
            "TF_LLM_ENDPOINT": "https://llm.example",
            "TF_LLM_API_KEY": "key",
            "TF_LLM_MODEL": "mini",
        }
    )
    assert isinstance(remote, RemoteLLMClient)
    assert remote.model == "mini"
    assert remote.api_key == "key"
