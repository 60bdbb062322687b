"""Configuration: file grammar, environment, flag precedence and validation."""

from __future__ import annotations

import pytest

from timeliner.config import (
    CONFIG_KEYS,
    ENV_API_TOKEN,
    ENV_EMBED_URL,
    ENV_LLM_URL,
    apply_env,
    apply_settings,
    load_config,
    parse_config_text,
)
from timeliner.errors import UsageError


def test_defaults_are_complete_and_local():
    config = load_config(environ={})
    assert config.embed.endpoint == "http://127.0.0.1:8000/v1/embeddings"
    assert config.embed.model == "mxbai-embed-large"
    assert config.embed.dimension == 1024
    assert config.embed.token_capacity == 512
    assert config.llm.endpoint == "http://127.0.0.1:8000/v1/chat/completions"
    assert config.llm.model == "llama3.1"
    assert config.llm.temperature == 0.1
    assert config.llm.max_tokens == 2000
    assert config.llm.completions == 1
    assert config.chunk.splitter == ". "
    assert config.chunk.max_length is None
    assert config.chunk.c_avg == 4
    assert config.retrieval.k is None
    assert config.paths.kb_dir == "kb"
    assert config.paths.report_dir == "reports"
    assert config.api_token is None


def test_parse_config_text_grammar():
    text = (
        "# a comment\n"
        "\n"
        "embed.dimension = 256\n"
        "chunk.splitter = \" / \"\n"
        "llm.model = llama3.1   # trailing comment trimmed\n"
        "agent.system_prompt = \"keep # inside quotes\"\n"
        "paths.kb_dir = \"tab\\tand\\nnewline\"\n"
    )
    settings = parse_config_text(text)
    assert settings == {
        "embed.dimension": "256",
        "chunk.splitter": " / ",
        "llm.model": "llama3.1",
        "agent.system_prompt": "keep # inside quotes",
        "paths.kb_dir": "tab\tand\nnewline",
    }


def test_parse_config_text_rejects_bad_lines():
    with pytest.raises(UsageError):
        parse_config_text("just words\n")
    with pytest.raises(UsageError):
        parse_config_text("= value\n")


def test_apply_settings_coerces_and_rejects():
    config = load_config(environ={})
    updated = apply_settings(
        config, {"embed.dimension": "64", "llm.temperature": "0.5", "retrieval.k": 3}
    )
    assert updated.embed.dimension == 64
    assert updated.llm.temperature == 0.5
    assert updated.retrieval.k == 3
    with pytest.raises(UsageError) as excinfo:
        apply_settings(config, {"no.such.key": "1"})
    assert "unknown config key" in str(excinfo.value)
    with pytest.raises(UsageError) as excinfo:
        apply_settings(config, {"embed.dimension": "many"})
    assert "needs a number" in str(excinfo.value)


def test_apply_env_reads_only_the_published_names():
    config = load_config(environ={})
    updated = apply_env(
        config,
        {
            ENV_EMBED_URL: "http://embed.test/v1/embeddings",
            ENV_LLM_URL: "http://llm.test/v1/chat/completions",
            ENV_API_TOKEN: "sekret",
            "GENDFIR_UNRELATED": "ignored",
        },
    )
    assert updated.embed.endpoint == "http://embed.test/v1/embeddings"
    assert updated.llm.endpoint == "http://llm.test/v1/chat/completions"
    assert updated.api_token == "sekret"
    # Empty values do not clobber the defaults.
    untouched = apply_env(config, {ENV_EMBED_URL: ""})
    assert untouched.embed.endpoint == config.embed.endpoint


def test_precedence_defaults_file_env_overrides(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text(
        "embed.endpoint = http://file.test/v1/embeddings\n"
        "embed.dimension = 128\n",
        encoding="utf-8",
    )
    file_only = load_config(path, environ={})
    assert file_only.embed.endpoint == "http://file.test/v1/embeddings"
    assert file_only.embed.dimension == 128

    env = {ENV_EMBED_URL: "http://env.test/v1/embeddings"}
    with_env = load_config(path, environ=env)
    assert with_env.embed.endpoint == "http://env.test/v1/embeddings"
    assert with_env.embed.dimension == 128  # env does not touch other keys

    overridden = load_config(
        path, environ=env, overrides={"embed.endpoint": "http://flag.test/v1"}
    )
    assert overridden.embed.endpoint == "http://flag.test/v1"


def test_load_config_missing_file_is_a_usage_error(tmp_path):
    with pytest.raises(UsageError) as excinfo:
        load_config(tmp_path / "absent.conf", environ={})
    assert "not found" in str(excinfo.value)


def test_validation_catches_bad_values():
    def load_with(overrides):
        return load_config(environ={}, overrides=overrides)

    with pytest.raises(UsageError):
        load_with({"embed.dimension": 0})
    with pytest.raises(UsageError):
        load_with({"llm.temperature": -0.1})
    with pytest.raises(UsageError):
        load_with({"retrieval.k": 0})
    with pytest.raises(UsageError):
        load_with({"chunk.c_avg": 0})
    with pytest.raises(UsageError):
        load_with({"chunk.splitter": ""})
    with pytest.raises(UsageError):
        load_with({"chunk.max_length": 5000, "embed.token_capacity": 512})


def test_config_keys_cover_every_section():
    assert len(CONFIG_KEYS) == 16
    prefixes = {key.split(".", 1)[0] for key in CONFIG_KEYS}
    assert prefixes == {"embed", "llm", "chunk", "retrieval", "agent", "paths"}


def test_helper_factories_reflect_the_config():
    config = load_config(environ={})
    chunk_config = config.chunking_config()
    assert chunk_config.splitter == ". "
    assert chunk_config.token_capacity == 512
    embedder = config.make_embedder(mock=True)
    assert embedder.dimension == 1024
    assert embedder.name == "hash-trigram"
    generator = config.make_generator(mock=True)
    assert generator.model_name == "mock-template"
    params = config.generation_params()
    assert params.temperature == 0.1
    assert params.max_tokens == 2000
    assert params.completions == 1
    assert params.model_name == "llama3.1"
