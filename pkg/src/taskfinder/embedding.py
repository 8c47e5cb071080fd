"""Embedding providers, cosine similarity, and the on-disk vector cache.

Two providers share one interface: a deterministic offline hasher (character
3-grams feature-hashed into a fixed-width L2-normalized vector) and a remote
HTTP client selected by the ``TF_EMBED_*`` environment variables. Provider
failures surface as ProviderUnavailable so callers can zero the embedding
signal instead of aborting the query.

Cache file format (UTF-8, one record per line)::

    digest<TAB>dim<TAB>v1,v2,...,vdim
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Protocol

from .errors import (
    CacheCorrupt,
    DimensionMismatch,
    InvalidVector,
    ProviderUnavailable,
    ZeroVector,
)

DEFAULT_DIM = 2 ** 8
DEFAULT_TIMEOUT = 10.0


def normalize_text(text: str) -> str:
    """Collapse runs of whitespace, strip, lowercase."""
    return " ".join(text.split()).lower()


def content_digest(provider_id: str, model_id: str, text: str) -> str:
    """Stable cache key over (provider, model, normalized text)."""
    payload = "\x00".join((provider_id, model_id, normalize_text(text)))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    provider_id: str
    model_id: str

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise InvalidVector("empty vector")
        if any(not math.isfinite(v) for v in self.values):
            raise InvalidVector("non-finite component")
        if all(v == 0.0 for v in self.values):
            raise InvalidVector("all-zero vector")

    @property
    def dim(self) -> int:
        return len(self.values)

    @cached_property
    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.values))


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity, clamped to [-1, 1] against rounding drift."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"dim {a.dim} vs {b.dim}")
    if a.norm == 0.0 or b.norm == 0.0:
        raise ZeroVector("cannot take cosine of a zero-norm vector")
    dot = 0.0
    for x, y in zip(a.values, b.values):
        dot += x * y
    return max(-1.0, min(1.0, dot / (a.norm * b.norm)))


class EmbeddingProvider(Protocol):
    provider_id: str
    model_id: str

    def embed(self, text: str) -> EmbeddingVector: ...


class HashingEmbedder:
    """Offline default: character 3-grams feature-hashed and L2-normalized.

    Platform-stable (blake2b over UTF-8 bytes, no PYTHONHASHSEED exposure)
    and fully deterministic, so the whole test suite runs without network
    access. `calls` counts embed invocations for cache assertions.
    """

    provider_id = "hash3gram"

    def __init__(self, dim: int = DEFAULT_DIM):
        if dim < 1:
            raise ValueError(f"dim must be positive, got {dim}")
        self.dim = dim
        self.model_id = f"d{dim}"
        self.calls = 0

    def _grams(self, text: str) -> Iterable[str]:
        # Boundary sentinels guarantee at least one gram per non-empty text.
        padded = f"\x02{normalize_text(text)}\x03"
        for i in range(len(padded) - 2):
            yield padded[i : i + 3]

    def embed(self, text: str) -> EmbeddingVector:
        if not normalize_text(text):
            raise InvalidVector("cannot embed empty text")
        self.calls += 1
        buckets = [0.0] * self.dim
        for gram in self._grams(text):
            h = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
            index = int.from_bytes(h[:4], "big") % self.dim
            sign = 1.0 if h[4] % 2 == 0 else -1.0
            buckets[index] += sign
        norm = math.sqrt(sum(v * v for v in buckets))
        if norm == 0.0:
            # Signed accumulation fully cancelled; fall back to one hot bucket.
            h = hashlib.blake2b(normalize_text(text).encode("utf-8"), digest_size=8).digest()
            buckets[int.from_bytes(h[:4], "big") % self.dim] = 1.0
            norm = 1.0
        return EmbeddingVector(
            values=tuple(v / norm for v in buckets),
            provider_id=self.provider_id,
            model_id=self.model_id,
        )


class RemoteEmbedder:
    """HTTP provider: POST {model, input} and read back an embedding array.

    Accepts either ``{"embedding": [...]}`` or ``{"data": [{"embedding":
    [...]}]}`` response bodies. Any transport, auth, or decode problem is
    reported as ProviderUnavailable.
    """

    provider_id = "remote"

    def __init__(
        self,
        endpoint: str,
        api_key: str = "",
        model: str = "default",
        timeout: float = DEFAULT_TIMEOUT,
    ):
        self.endpoint = endpoint
        self.api_key = api_key
        self.model_id = model
        self.timeout = timeout
        self.calls = 0
        self._dim: int | None = None

    def embed(self, text: str) -> EmbeddingVector:
        self.calls += 1
        body = json.dumps({"model": self.model_id, "input": text}).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        request = urllib.request.Request(self.endpoint, data=body, headers=headers)
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                payload = json.loads(response.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise ProviderUnavailable(f"embedding endpoint failed: {exc}") from exc
        raw = payload.get("embedding") if isinstance(payload, dict) else None
        if raw is None and isinstance(payload, dict):
            data = payload.get("data")
            if isinstance(data, list) and data and isinstance(data[0], dict):
                raw = data[0].get("embedding")
        if not isinstance(raw, list):
            raise ProviderUnavailable("embedding endpoint returned no embedding field")
        try:
            vector = EmbeddingVector(
                values=tuple(raw), provider_id=self.provider_id, model_id=self.model_id
            )
        except (TypeError, ValueError) as exc:
            raise InvalidVector(f"embedding endpoint returned bad values: {exc}") from exc
        if self._dim is None:
            self._dim = vector.dim
        elif vector.dim != self._dim:
            raise InvalidVector(f"dimension changed from {self._dim} to {vector.dim}")
        return vector


def provider_from_env(env: Mapping[str, str] | None = None) -> EmbeddingProvider:
    """Remote provider when TF_EMBED_ENDPOINT is set, offline hasher otherwise."""
    env = os.environ if env is None else env
    endpoint = env.get("TF_EMBED_ENDPOINT", "").strip()
    if endpoint:
        return RemoteEmbedder(
            endpoint=endpoint,
            api_key=env.get("TF_EMBED_API_KEY", ""),
            model=env.get("TF_EMBED_MODEL", "default"),
        )
    return HashingEmbedder()


class EmbeddingCache:
    """Digest-keyed vector store mirrored to a TSV file.

    Misses are appended to the backing file as they are stored; flush()
    rewrites the whole file atomically (temp file + rename). All mutation
    goes through one lock so concurrent readers never see a torn line.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._entries: dict[str, tuple[float, ...]] = {}
        # Constructed-and-validated vectors, so hot lookups skip revalidation.
        self._vector_memo: dict[str, EmbeddingVector] = {}
        self._lock = threading.Lock()
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        with self.path.open(encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh, start=1):
                line = raw.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                digest, values = self._parse_line(line_no, line)
                self._entries[digest] = values

    def _parse_line(self, line_no: int, line: str) -> tuple[str, tuple[float, ...]]:
        parts = line.split("\t")
        if len(parts) != 3:
            raise CacheCorrupt(self.path, line_no, f"expected 3 fields, got {len(parts)}")
        digest, dim_field, values_field = parts
        try:
            dim = int(dim_field)
        except ValueError:
            raise CacheCorrupt(self.path, line_no, f"bad dimension {dim_field!r}") from None
        if dim < 1:
            raise CacheCorrupt(self.path, line_no, f"non-positive dimension {dim}")
        try:
            values = tuple(float(v) for v in values_field.split(","))
        except ValueError:
            raise CacheCorrupt(self.path, line_no, "non-numeric vector component") from None
        if len(values) != dim:
            raise CacheCorrupt(
                self.path, line_no, f"declared dim {dim} but {len(values)} components"
            )
        if any(not math.isfinite(v) for v in values):
            raise CacheCorrupt(self.path, line_no, "non-finite vector component")
        return digest, values

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, digest: str) -> bool:
        return digest in self._entries

    def get(self, digest: str) -> tuple[float, ...] | None:
        return self._entries.get(digest)

    def get_vector(
        self, digest: str, provider_id: str, model_id: str
    ) -> EmbeddingVector | None:
        memoized = self._vector_memo.get(digest)
        if memoized is not None:
            return memoized
        stored = self._entries.get(digest)
        if stored is None:
            return None
        vector = EmbeddingVector(values=stored, provider_id=provider_id, model_id=model_id)
        self._vector_memo[digest] = vector
        return vector

    def put(self, digest: str, values: tuple[float, ...]) -> None:
        """Store and immediately append to the backing file."""
        with self._lock:
            self._entries[digest] = tuple(values)
            self._vector_memo.pop(digest, None)
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(self._format_line(digest, self._entries[digest]))

    @staticmethod
    def _format_line(digest: str, values: tuple[float, ...]) -> str:
        return f"{digest}\t{len(values)}\t{','.join(repr(v) for v in values)}\n"

    def flush(self) -> None:
        """Rewrite the backing file in one atomic replace."""
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            tmp = self.path.with_name(self.path.name + ".tmp")
            with tmp.open("w", encoding="utf-8") as fh:
                for digest, values in self._entries.items():
                    fh.write(self._format_line(digest, values))
            os.replace(tmp, self.path)


def cached_embed(
    cache: EmbeddingCache, provider: EmbeddingProvider, text: str
) -> EmbeddingVector:
    """Serve from cache when possible; on a miss, embed and persist."""
    digest = content_digest(provider.provider_id, provider.model_id, text)
    stored = cache.get_vector(digest, provider.provider_id, provider.model_id)
    if stored is not None:
        return stored
    vector = provider.embed(text)
    cache.put(digest, vector.values)
    return vector
