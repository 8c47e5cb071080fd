"""Test doubles shared across the suite."""

from __future__ import annotations

import io
import json
import random
import re

from taskfinder.embedding import EmbeddingVector
from taskfinder.errors import ProviderUnavailable

_ITEM_RE = re.compile(r"^(\d+)\. (.*?) — (.*)$", re.MULTILINE)


class FakeResponse(io.BytesIO):
    """Stand-in for urlopen's context-managed response object."""

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def shortlist_lines(prompt: str) -> list[tuple[int, str]]:
    """(idx, name) pairs parsed from a rendered prompt."""
    return [(int(m.group(1)), m.group(2)) for m in _ITEM_RE.finditer(prompt)]


class DeadProvider:
    """Embedding provider whose backend is permanently down."""

    provider_id = "dead"
    model_id = "d0"

    def __init__(self):
        self.calls = 0

    def embed(self, text: str) -> EmbeddingVector:
        self.calls += 1
        raise ProviderUnavailable("backend unreachable")


class CountingProvider:
    """Wraps another provider and counts pass-through calls."""

    def __init__(self, inner):
        self.inner = inner
        self.provider_id = inner.provider_id
        self.model_id = inner.model_id
        self.calls = 0

    def embed(self, text: str):
        self.calls += 1
        return self.inner.embed(text)


class FailingClient:
    """LLM client that always times out."""

    def complete(self, prompt: str) -> str:
        raise TimeoutError("simulated timeout")


class StaticClient:
    """Returns one canned string for every prompt."""

    def __init__(self, response: str):
        self.response = response
        self.prompts: list[str] = []

    def complete(self, prompt: str) -> str:
        self.prompts.append(prompt)
        return self.response


class EchoClient:
    """Valid response mirroring the shortlist order (identity re-rank)."""

    def complete(self, prompt: str) -> str:
        payload = [
            {"rank": position + 1, "idx": idx, "task_name": name, "reason": "echo"}
            for position, (idx, name) in enumerate(shortlist_lines(prompt))
        ]
        return json.dumps(payload)


class ReversingClient:
    """Valid response in reversed shortlist order."""

    def complete(self, prompt: str) -> str:
        items = shortlist_lines(prompt)
        payload = [
            {"rank": position + 1, "idx": idx, "task_name": name, "reason": "reversed"}
            for position, (idx, name) in enumerate(reversed(items))
        ]
        return json.dumps(payload)


class PermutingClient:
    """Returns the shortlist in a caller-chosen idx order."""

    def __init__(self, order: list[int]):
        self.order = order

    def complete(self, prompt: str) -> str:
        names = dict(shortlist_lines(prompt))
        payload = [
            {"rank": position + 1, "idx": idx, "task_name": names[idx], "reason": "fixed"}
            for position, idx in enumerate(self.order)
        ]
        return json.dumps(payload)


class AdversarialClient:
    """Emits roughly half invalid material: bad idx, wrong names, bad types,
    malformed payloads, or outright garbage. Drives the hallucination check.
    """

    def __init__(self, rng: random.Random):
        self.rng = rng

    def complete(self, prompt: str) -> str:
        items = shortlist_lines(prompt)
        roll = self.rng.random()
        if roll < 0.08:
            return "the best task is Mystery Task, trust me"
        if roll < 0.16:
            return '{"rank": 1, "idx": 0}'
        if roll < 0.22:
            return json.dumps([{"rank": "first", "idx": 0, "task_name": "x", "reason": "y"}])
        entries = []
        rank = 1
        for idx, name in items:
            bad_roll = self.rng.random()
            if bad_roll < 0.25:
                entry_name = "Hallucinated " + name
            elif bad_roll < 0.5:
                idx = idx + len(items) + self.rng.randrange(50)
                entry_name = name
            else:
                entry_name = name
            entries.append(
                {"rank": rank, "idx": idx, "task_name": entry_name, "reason": "adv"}
            )
            rank += 1
        self.rng.shuffle(entries)
        for position, entry in enumerate(entries):
            entry["rank"] = position + 1
        return json.dumps(entries)
