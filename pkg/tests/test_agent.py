"""Report generation: prompt assembly, the template generator, and parsing."""

from __future__ import annotations

import numpy as np
import pytest

from timeliner.agent import (
    DEFAULT_QUERY,
    REPORT_HEADINGS,
    AgentProfile,
    GenerationParams,
    MockGenerator,
    Provenance,
    build_agent_prompt,
    generate_report,
    parse_attribute_pairs,
    parse_context_block,
    parse_report_sections,
)
from timeliner.attention import ContextBundle, ContextEntry
from timeliner.errors import EmptyContext, UsageError

LOG_CLEAR = (
    "Event ID: 1102, Details: Audit log cleared, Level: Critical, "
    "Date and Time: 2016/09/15 02:18:05, Source: Windows Security, "
    "Task Category: Log clear"
)
FAILED_LOGON = (
    "Event ID: 4625, Details: Logon attempt failed, Level: Warning, "
    "Date and Time: 2016/09/15 02:15:05, Source: Windows Security, "
    "Task Category: Logon"
)
PHISH_MAIL = (
    "From: alice@corp.test, To: bob@corp.test, Subject: Invoice attached, "
    "Date and Time: 2016/09/15 02:16:00, Body: see attachment"
)


def make_bundle(*texts_scores: tuple[str, float]) -> ContextBundle:
    total = sum(score for _, score in texts_scores) or 1.0
    entries = tuple(
        ContextEntry(ordinal=i + 1, text=text, score=score, weight=score / total)
        for i, (text, score) in enumerate(texts_scores)
    )
    return ContextBundle(
        entries=entries, context_vector=np.zeros(2), query_text="q"
    )


def test_prompt_layout_is_exact():
    bundle = make_bundle((FAILED_LOGON, 0.412345))
    system_prompt, user_prompt = build_agent_prompt(
        AgentProfile(), bundle, "What happened?"
    )
    assert "analysing artefacts" in system_prompt
    assert user_prompt == (
        "QUERY: What happened?\n"
        "\n"
        "CONTEXT:\n"
        f"[1] (score=0.412345) {FAILED_LOGON}\n"
        "END CONTEXT\n"
        "\n"
        "Write an incident report with exactly these sections:\n"
        "1. Event Timeline Reconstructed\n"
        "2. Anomalous Events and Trends\n"
        "3. Root Cause Analysis\n"
        "4. Mitigation Solutions\n"
        "5. Recommendations\n"
        "\n"
        "Use only events from the context above."
    )


def test_prompt_requires_query_and_entries():
    bundle = make_bundle((FAILED_LOGON, 0.5))
    with pytest.raises(UsageError):
        build_agent_prompt(AgentProfile(), bundle, "   ")
    empty = ContextBundle(entries=(), context_vector=np.zeros(2), query_text="q")
    with pytest.raises(EmptyContext):
        build_agent_prompt(AgentProfile(), empty, "What happened?")


def test_parse_context_block_inverts_the_prompt():
    bundle = make_bundle((LOG_CLEAR, 0.9), (FAILED_LOGON, 0.8))
    _, user_prompt = build_agent_prompt(AgentProfile(), bundle, "q")
    parsed = parse_context_block(user_prompt)
    assert parsed == [(1, 0.9, LOG_CLEAR), (2, 0.8, FAILED_LOGON)]
    with pytest.raises(EmptyContext):
        parse_context_block("no context markers here")
    with pytest.raises(EmptyContext):
        parse_context_block("CONTEXT:\nEND CONTEXT")


def test_parse_attribute_pairs_folds_comma_values():
    pairs = parse_attribute_pairs(FAILED_LOGON)
    assert pairs["Event ID"] == "4625"
    assert pairs["Source"] == "Windows Security"
    folded = parse_attribute_pairs("Details: stopped, then restarted, Level: Error")
    assert folded == {"Details": "stopped, then restarted", "Level": "Error"}
    nested = parse_attribute_pairs("Body: See: the notes, Level: Info")
    assert nested == {"Body": "See: the notes", "Level": "Info"}


def test_mock_generator_is_deterministic():
    bundle = make_bundle((LOG_CLEAR, 0.9), (FAILED_LOGON, 0.8))
    system_prompt, user_prompt = build_agent_prompt(AgentProfile(), bundle, "q")
    generator = MockGenerator()
    params = GenerationParams()
    first = generator.generate(system_prompt, user_prompt, params)
    second = generator.generate(system_prompt, user_prompt, params)
    assert first.text == second.text
    assert first.truncated is False
    assert generator.model_name == "mock-template"


def test_mock_report_has_all_headings_and_sorted_timeline():
    bundle = make_bundle((LOG_CLEAR, 0.9), (FAILED_LOGON, 0.8), (PHISH_MAIL, 0.7))
    system_prompt, user_prompt = build_agent_prompt(
        AgentProfile(), bundle, DEFAULT_QUERY
    )
    text = MockGenerator().generate(system_prompt, user_prompt, GenerationParams()).text
    for heading in REPORT_HEADINGS:
        assert f"{heading}\n" in text or text.endswith(heading)
    sections = parse_report_sections(text)
    assert sorted(sections) == [
        "anomalies",
        "mitigations",
        "recommendations",
        "root_cause",
        "timeline",
    ]
    timeline = sections["timeline"].splitlines()
    assert timeline == [
        "- 2016/09/15 02:15:05: Event ID 4625: Logon attempt failed "
        "(Source: Windows Security)",
        "- 2016/09/15 02:16:00: Invoice attached (Source: alice@corp.test)",
        "- 2016/09/15 02:18:05: Event ID 1102: Audit log cleared "
        "(Source: Windows Security)",
    ]
    anomalies = sections["anomalies"]
    assert "- Level Critical: 1 event(s) in context" in anomalies
    assert "- Level Warning: 1 event(s) in context" in anomalies
    root = sections["root_cause"]
    assert (
        "- Activity in context spans 2016/09/15 02:15:05 through "
        "2016/09/15 02:18:05" in root
    )
    assert "- The most frequent source is Windows Security (2 of 3 events)" in root
    assert (
        "- The event most aligned with the query is: Event ID 1102: "
        "Audit log cleared (Source: Windows Security)" in root
    )


def test_mock_report_handles_missing_timestamps():
    bundle = make_bundle(("Details: no clock here, Level: Info", 0.5))
    system_prompt, user_prompt = build_agent_prompt(AgentProfile(), bundle, "q")
    text = MockGenerator().generate(system_prompt, user_prompt, GenerationParams()).text
    assert "- time unknown: no clock here" in text


def test_mock_report_flags_recurring_event_ids():
    repeated = (
        "Event ID: 4625, Details: Logon attempt failed, "
        "Date and Time: 2016/09/15 02:1{}:00"
    )
    bundle = make_bundle(
        (repeated.format(1), 0.9),
        (repeated.format(2), 0.8),
        (repeated.format(3), 0.7),
    )
    system_prompt, user_prompt = build_agent_prompt(AgentProfile(), bundle, "q")
    text = MockGenerator().generate(system_prompt, user_prompt, GenerationParams()).text
    assert "Event ID 4625 recurs 3 times" in text


def test_parse_report_sections_accepts_markdown_and_colon_headings():
    body = (
        "Preamble paragraph.\n"
        "\n"
        "## Event Timeline Reconstructed:\n"
        "- first\n"
        "\n"
        "Anomalous Events and Trends\n"
        "- second\n"
    )
    sections = parse_report_sections(body)
    assert sections["preamble"] == "Preamble paragraph."
    assert sections["timeline"] == "- first"
    assert sections["anomalies"] == "- second"
    assert "root_cause" not in sections


def test_generate_report_wraps_provenance_and_sections():
    bundle = make_bundle((LOG_CLEAR, 0.9))
    system_prompt, user_prompt = build_agent_prompt(AgentProfile(), bundle, "q")
    provenance = Provenance(
        query="q",
        k=1,
        t=25,
        model="mock-template",
        kb_fingerprint="hash-trigram:1024",
        generated_at="2026-08-18T00:00:00Z",
    )
    report = generate_report(
        MockGenerator(), system_prompt, user_prompt, GenerationParams(), provenance
    )
    assert report.truncated is False
    assert report.provenance.k == 1
    assert report.provenance.kb_fingerprint == "hash-trigram:1024"
    assert set(report.sections) >= {
        "timeline",
        "anomalies",
        "root_cause",
        "mitigations",
        "recommendations",
    }
    assert report.body.startswith("Event Timeline Reconstructed")
    assert report.body.endswith("\n")
