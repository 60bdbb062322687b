"""Run configuration: defaults, config file, environment, flags.

Configuration is a flat ``key = value`` file with dotted keys and ``#``
comments. A value wrapped in double quotes is taken verbatim after
unescaping, which is how a splitter with a trailing space survives the
parse. Precedence, lowest to highest: built-in defaults, config file,
environment (endpoints and credentials only), command-line flags.

Environment variables: GENDFIR_EMBED_URL overrides embed.endpoint,
GENDFIR_LLM_URL overrides llm.endpoint, GENDFIR_API_TOKEN supplies the
bearer token for both remote providers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from . import agent as agent_mod
from . import chunking as chunking_mod
from . import embedding as embedding_mod
from .errors import UsageError

logger = logging.getLogger(__name__)

ENV_EMBED_URL = "GENDFIR_EMBED_URL"
ENV_LLM_URL = "GENDFIR_LLM_URL"
ENV_API_TOKEN = "GENDFIR_API_TOKEN"

DEFAULT_EMBED_ENDPOINT = "http://127.0.0.1:8000/v1/embeddings"
DEFAULT_LLM_ENDPOINT = "http://127.0.0.1:8000/v1/chat/completions"
DEFAULT_EMBED_MODEL = "mxbai-embed-large"
DEFAULT_LLM_MODEL = "llama3.1"


@dataclass(slots=True)
class EmbedConfig:
    endpoint: str = DEFAULT_EMBED_ENDPOINT
    model: str = DEFAULT_EMBED_MODEL
    dimension: int = embedding_mod.DEFAULT_DIMENSION
    token_capacity: int = embedding_mod.DEFAULT_TOKEN_CAPACITY


@dataclass(slots=True)
class LlmConfig:
    endpoint: str = DEFAULT_LLM_ENDPOINT
    model: str = DEFAULT_LLM_MODEL
    temperature: float = agent_mod.DEFAULT_TEMPERATURE
    max_tokens: int = agent_mod.DEFAULT_MAX_TOKENS
    completions: int = agent_mod.DEFAULT_COMPLETIONS


@dataclass(slots=True)
class ChunkConfig:
    splitter: str = chunking_mod.DEFAULT_SPLITTER
    max_length: int | None = None
    c_avg: int = chunking_mod.DEFAULT_CHARS_PER_TOKEN


@dataclass(slots=True)
class RetrievalConfig:
    k: int | None = None


@dataclass(slots=True)
class AgentConfig:
    system_prompt: str = agent_mod.DEFAULT_SYSTEM_PROMPT


@dataclass(slots=True)
class PathsConfig:
    kb_dir: str = "kb"
    report_dir: str = "reports"


@dataclass(slots=True)
class RunConfig:
    """Everything a pipeline run needs, resolved from all sources."""

    embed: EmbedConfig = field(default_factory=EmbedConfig)
    llm: LlmConfig = field(default_factory=LlmConfig)
    chunk: ChunkConfig = field(default_factory=ChunkConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)
    api_token: str | None = None

    def validate(self) -> None:
        if self.embed.dimension < 1:
            raise UsageError(f"embed.dimension must be >= 1, got {self.embed.dimension}")
        if self.embed.token_capacity < 1:
            raise UsageError(
                f"embed.token_capacity must be >= 1, got {self.embed.token_capacity}"
            )
        if self.llm.temperature < 0.0:
            raise UsageError(f"llm.temperature must be >= 0, got {self.llm.temperature}")
        if self.llm.max_tokens < 1:
            raise UsageError(f"llm.max_tokens must be >= 1, got {self.llm.max_tokens}")
        if self.llm.completions < 1:
            raise UsageError(f"llm.completions must be >= 1, got {self.llm.completions}")
        if self.retrieval.k is not None and self.retrieval.k < 1:
            raise UsageError(f"retrieval.k must be >= 1, got {self.retrieval.k}")
        self.chunking_config().validate()

    def chunking_config(self) -> chunking_mod.ChunkingConfig:
        return chunking_mod.ChunkingConfig(
            max_length=self.chunk.max_length,
            c_avg=self.chunk.c_avg,
            token_capacity=self.embed.token_capacity,
            splitter=self.chunk.splitter,
        )

    def make_embedder(self, mock: bool = False):
        if mock:
            return embedding_mod.HashEmbedder(
                dimension=self.embed.dimension,
                token_capacity=self.embed.token_capacity,
            )
        return embedding_mod.RemoteEmbedder(
            endpoint=self.embed.endpoint,
            model=self.embed.model,
            dimension=self.embed.dimension,
            token_capacity=self.embed.token_capacity,
            api_token=self.api_token,
        )

    def make_generator(self, mock: bool = False):
        if mock:
            return agent_mod.MockGenerator()
        return agent_mod.RemoteGenerator(
            endpoint=self.llm.endpoint,
            model=self.llm.model,
            api_token=self.api_token,
        )

    def generation_params(self) -> agent_mod.GenerationParams:
        return agent_mod.GenerationParams(
            temperature=self.llm.temperature,
            max_tokens=self.llm.max_tokens,
            completions=self.llm.completions,
            model_name=self.llm.model,
        )

    def agent_profile(self) -> agent_mod.AgentProfile:
        return agent_mod.AgentProfile(system_prompt=self.agent.system_prompt)


def _unquote(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == '"' and value[-1] == '"':
        inner = value[1:-1]
        out: list[str] = []
        i = 0
        while i < len(inner):
            ch = inner[i]
            if ch == "\\" and i + 1 < len(inner):
                mapped = {"\\": "\\", '"': '"', "t": "\t", "n": "\n"}.get(inner[i + 1])
                if mapped is not None:
                    out.append(mapped)
                    i += 2
                    continue
            out.append(ch)
            i += 1
        return "".join(out)
    return value


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines into a flat mapping.

    Blank lines and ``#`` comment lines are skipped. An unquoted value
    has surrounding whitespace stripped and may contain an inline
    ``#`` comment; a double-quoted value is kept verbatim (after
    backslash unescaping) and never comment-trimmed.
    """
    result: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"config line {number} is not 'key = value': {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise UsageError(f"config line {number} has an empty key")
        value = value.strip()
        if not (value.startswith('"') and value.endswith('"') and len(value) >= 2):
            value = value.split("#", 1)[0].strip()
        result[key] = _unquote(value)
    return result


_INT_KEYS = {
    "embed.dimension",
    "embed.token_capacity",
    "llm.max_tokens",
    "llm.completions",
    "chunk.max_length",
    "chunk.c_avg",
    "retrieval.k",
}
_FLOAT_KEYS = {"llm.temperature"}

_KEY_SCHEMA: dict[str, tuple[str, str]] = {
    "embed.endpoint": ("embed", "endpoint"),
    "embed.model": ("embed", "model"),
    "embed.dimension": ("embed", "dimension"),
    "embed.token_capacity": ("embed", "token_capacity"),
    "llm.endpoint": ("llm", "endpoint"),
    "llm.model": ("llm", "model"),
    "llm.temperature": ("llm", "temperature"),
    "llm.max_tokens": ("llm", "max_tokens"),
    "llm.completions": ("llm", "completions"),
    "chunk.splitter": ("chunk", "splitter"),
    "chunk.max_length": ("chunk", "max_length"),
    "chunk.c_avg": ("chunk", "c_avg"),
    "retrieval.k": ("retrieval", "k"),
    "agent.system_prompt": ("agent", "system_prompt"),
    "paths.kb_dir": ("paths", "kb_dir"),
    "paths.report_dir": ("paths", "report_dir"),
}

CONFIG_KEYS = tuple(_KEY_SCHEMA)


def _coerce(key: str, value: str) -> Any:
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
    except ValueError as exc:
        raise UsageError(f"config key {key} needs a number, got {value!r}") from exc
    return value


def apply_settings(config: RunConfig, settings: Mapping[str, Any]) -> RunConfig:
    """Overlay dotted-key settings onto a config, in place."""
    for key, value in settings.items():
        if key not in _KEY_SCHEMA:
            raise UsageError(f"unknown config key {key!r}")
        section, attr = _KEY_SCHEMA[key]
        coerced = _coerce(key, value) if isinstance(value, str) else value
        setattr(getattr(config, section), attr, coerced)
    return config


def apply_env(config: RunConfig, environ: Mapping[str, str]) -> RunConfig:
    """Overlay endpoint and credential overrides from the environment."""
    if environ.get(ENV_EMBED_URL):
        config.embed.endpoint = environ[ENV_EMBED_URL]
    if environ.get(ENV_LLM_URL):
        config.llm.endpoint = environ[ENV_LLM_URL]
    if environ.get(ENV_API_TOKEN):
        config.api_token = environ[ENV_API_TOKEN]
    return config


def load_config(
    path: str | Path | None = None,
    environ: Mapping[str, str] | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> RunConfig:
    """Resolve a RunConfig from defaults, file, environment and overrides."""
    config = RunConfig()
    if path is not None:
        file_path = Path(path)
        if not file_path.is_file():
            raise UsageError(f"config file not found: {file_path}")
        apply_settings(config, parse_config_text(file_path.read_text(encoding="utf-8")))
    if environ is not None:
        apply_env(config, environ)
    if overrides:
        apply_settings(config, overrides)
    config.validate()
    return config
