"""Engine configuration with layered sources.

Precedence, highest first: explicit overrides (CLI flags), environment
variables (provider endpoints and credentials only), a flat ``key=value``
config file, built-in defaults. Unknown file keys fail loudly; a typoed
weight name silently falling back to its default would be worse.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping

from .embedding import EmbeddingProvider, HashingEmbedder, RemoteEmbedder
from .errors import ConfigError
from .prefilter import ScoringWeights
from .reranker import LLMClient, OverlapMockClient, RemoteLLMClient


@dataclass
class EngineConfig:
    catalog: str = ""
    suite: str = ""
    cache: str = ""
    report: str = "taskfinder_report.tsv"
    alpha: float = 1.0
    beta: float = 0.8
    gamma: float = 0.5
    delta: float = 0.3
    w_name: float = 2.0
    w_help: float = 1.0
    shortlist_k: int = 15
    top_k: int = 5
    max_examples: int = 3
    train_fraction: float = 0.8
    seed: int = 0
    # Blank means the built-in list; otherwise a comma-separated override.
    stopwords: str = ""
    embed_endpoint: str = ""
    embed_api_key: str = ""
    embed_model: str = "default"
    llm_endpoint: str = ""
    llm_api_key: str = ""
    llm_model: str = "default"

    def weights(self) -> ScoringWeights:
        try:
            return ScoringWeights(
                alpha=self.alpha,
                beta=self.beta,
                gamma=self.gamma,
                delta=self.delta,
                w_name=self.w_name,
                w_help=self.w_help,
                shortlist_k=self.shortlist_k,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


_FIELD_TYPES: dict[str, type] = {f.name: f.type for f in fields(EngineConfig)}  # type: ignore[misc]

# Only provider settings may come from the environment; everything else is
# explicit configuration.
ENV_KEYS = {
    "embed_endpoint": "TF_EMBED_ENDPOINT",
    "embed_api_key": "TF_EMBED_API_KEY",
    "embed_model": "TF_EMBED_MODEL",
    "llm_endpoint": "TF_LLM_ENDPOINT",
    "llm_api_key": "TF_LLM_API_KEY",
    "llm_model": "TF_LLM_MODEL",
}

_TYPE_BY_NAME = {"str": str, "float": float, "int": int}


def _coerce(key: str, raw: str) -> Any:
    declared = _FIELD_TYPES[key]
    target = _TYPE_BY_NAME.get(declared) if isinstance(declared, str) else declared
    if target is None:
        raise ConfigError(f"cannot coerce config key {key!r}")
    if target is str:
        return raw
    try:
        return target(raw)
    except ValueError:
        raise ConfigError(
            f"config key {key!r} expects {target.__name__}, got {raw!r}"
        ) from None


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Read flat ``key=value`` lines; ``#`` comments and blanks ignored."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    pairs: dict[str, str] = {}
    for line_no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{line_no}: unknown config key {key!r}")
        pairs[key] = value.strip()
    return pairs


def load_config(
    path: str | Path | None = None,
    env: Mapping[str, str] | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> EngineConfig:
    """Merge defaults, file, environment, and overrides into one config."""
    config = EngineConfig()
    if path is not None:
        for key, value in parse_config_file(path).items():
            setattr(config, key, _coerce(key, value))
    env = os.environ if env is None else env
    for key, env_name in ENV_KEYS.items():
        if env_name in env and env[env_name].strip():
            setattr(config, key, env[env_name].strip())
    if overrides:
        for key, value in overrides.items():
            if value is None:
                continue
            if key not in _FIELD_TYPES:
                raise ConfigError(f"unknown config key {key!r}")
            setattr(config, key, value)
    config.weights()
    return config


def stopwords_from_config(config: EngineConfig) -> frozenset[str] | None:
    """None keeps the default list; a non-blank value replaces it wholesale."""
    if not config.stopwords.strip():
        return None
    return frozenset(
        word.strip().lower() for word in config.stopwords.split(",") if word.strip()
    )


def provider_from_config(config: EngineConfig) -> EmbeddingProvider:
    if config.embed_endpoint:
        return RemoteEmbedder(
            endpoint=config.embed_endpoint,
            api_key=config.embed_api_key,
            model=config.embed_model,
        )
    return HashingEmbedder()


def client_from_config(config: EngineConfig) -> LLMClient:
    if config.llm_endpoint:
        return RemoteLLMClient(
            endpoint=config.llm_endpoint,
            api_key=config.llm_api_key,
            model=config.llm_model,
        )
    return OverlapMockClient()
