"""Chunking: one event per chunk, shared padded length, TSV round trip."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SCENARIO_SETTINGS, scenario_csv
from timeliner.chunking import (
    Chunk,
    ChunkingConfig,
    chunk_document,
    estimate_tokens,
    event_length,
    incident_total_length,
    max_event_length,
    read_chunks_tsv,
    write_chunks_tsv,
)
from timeliner.errors import EmptyInput, EventTooLong, TokenBudgetExceeded, UsageError
from timeliner.events import parse_incident_csv, render_incident_document


def audit_document() -> str:
    incident = parse_incident_csv(scenario_csv("unauthorised_access"))
    return render_incident_document(incident, splitter=". ").text


def test_one_event_becomes_one_fixed_length_chunk():
    splitter, max_length = SCENARIO_SETTINGS["unauthorised_access"]
    chunks = chunk_document(
        audit_document(), ChunkingConfig(max_length=max_length, splitter=splitter)
    )
    assert len(chunks) == 25
    assert all(len(chunk.text) == max_length for chunk in chunks)
    assert [chunk.ordinal for chunk in chunks] == list(range(1, 26))
    for chunk in chunks:
        assert chunk.text == chunk.stripped_text.ljust(max_length)
        assert chunk.char_count == len(chunk.stripped_text)
        assert chunk.token_estimate == math.ceil(chunk.char_count / 4)


def test_auto_length_uses_the_longest_event():
    document = audit_document()
    chunks = chunk_document(document, ChunkingConfig())
    width = max(chunk.char_count for chunk in chunks)
    assert all(len(chunk.text) == width for chunk in chunks)
    assert any(chunk.char_count == width for chunk in chunks)


def test_overlong_event_is_an_error_not_a_truncation():
    with pytest.raises(EventTooLong) as excinfo:
        chunk_document("short. " + "x" * 60 + ". ", ChunkingConfig(max_length=50))
    assert excinfo.value.ordinal == 2


def test_token_budget_is_enforced_per_chunk():
    config = ChunkingConfig(token_capacity=10)
    with pytest.raises(TokenBudgetExceeded) as excinfo:
        chunk_document(audit_document(), config)
    assert excinfo.value.ordinal == 1


def test_config_validation_rules():
    with pytest.raises(UsageError):
        chunk_document("a. ", ChunkingConfig(max_length=0))
    with pytest.raises(UsageError):
        chunk_document("a. ", ChunkingConfig(c_avg=0))
    with pytest.raises(UsageError):
        chunk_document("a. ", ChunkingConfig(splitter=""))
    # max_length may not exceed what the token budget can ever admit.
    with pytest.raises(UsageError):
        chunk_document("a. ", ChunkingConfig(max_length=240, token_capacity=10))


def test_empty_document_is_rejected():
    with pytest.raises(EmptyInput):
        chunk_document("", ChunkingConfig())
    with pytest.raises(EmptyInput):
        chunk_document(" .  . ", ChunkingConfig())


def test_estimate_tokens_is_a_ceiling():
    assert estimate_tokens("") == 0
    assert estimate_tokens("abcd") == 1
    assert estimate_tokens("abcde") == 2
    assert estimate_tokens("ab", c_avg=2) == 1
    with pytest.raises(UsageError):
        estimate_tokens("ab", c_avg=0)


def test_length_helpers():
    assert event_length("naïve 🦏") == 7
    assert max_event_length(["ab", "abcd", "a"]) == 4
    with pytest.raises(EmptyInput):
        max_event_length([])
    chunks = chunk_document("ab. abcd. ", ChunkingConfig())
    assert incident_total_length(chunks) == 6


def test_tsv_round_trip_preserves_awkward_text(tmp_path):
    texts = ["plain event", "tab\there", "back\\slash", "multi\nline", "return\rhere"]
    width = max(len(text) for text in texts)
    chunks = [
        Chunk(
            text=text.ljust(width),
            stripped_text=text,
            ordinal=i + 1,
            char_count=len(text),
            token_estimate=estimate_tokens(text),
        )
        for i, text in enumerate(texts)
    ]
    path = tmp_path / "chunks.tsv"
    write_chunks_tsv(chunks, path)
    assert read_chunks_tsv(path) == chunks
    # One line per chunk even when the text itself contains newlines.
    assert len(path.read_text(encoding="utf-8").splitlines()) == len(chunks)


def test_tsv_read_repads_to_requested_width(tmp_path):
    chunks = chunk_document("ab. abcd. ", ChunkingConfig())
    path = tmp_path / "chunks.tsv"
    write_chunks_tsv(chunks, path)
    wide = read_chunks_tsv(path, max_length=10)
    assert all(len(chunk.text) == 10 for chunk in wide)
    assert [chunk.stripped_text for chunk in wide] == ["ab", "abcd"]


def test_tsv_read_rejects_empty_file(tmp_path):
    path = tmp_path / "chunks.tsv"
    path.write_text("", encoding="utf-8")
    with pytest.raises(EmptyInput):
        read_chunks_tsv(path)


simple_events = st.text(
    alphabet=st.characters(min_codepoint=33, max_codepoint=126),
    min_size=1,
    max_size=40,
).filter(lambda s: ". " not in s)


@settings(max_examples=150, deadline=None)
@given(st.lists(simple_events, min_size=1, max_size=20))
def test_every_event_round_trips_through_chunks(events):
    document = "".join(event + ". " for event in events)
    chunks = chunk_document(document, ChunkingConfig(splitter=". "))
    assert [chunk.stripped_text for chunk in chunks] == events
    width = max(len(event) for event in events)
    assert all(len(chunk.text) == width for chunk in chunks)
    assert all(chunk.text.rstrip(" ") == chunk.stripped_text.rstrip(" ") for chunk in chunks)
