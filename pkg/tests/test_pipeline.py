"""End-to-end pipeline wiring in process (no CLI, no network)."""

from __future__ import annotations

import pytest

from conftest import scenario_csv
from timeliner.agent import MockGenerator
from timeliner.config import load_config
from timeliner.embedding import HashEmbedder
from timeliner.errors import PipelineError
from timeliner.pipeline import analyze_kb, build_manifest, run_pipeline


def test_analyze_kb_produces_report_manifest_and_bundle(ua_kb):
    result = analyze_kb(
        ua_kb,
        "Identify all Events with Level: Warning.",
        HashEmbedder(),
        MockGenerator(),
        k=5,
    )
    assert result.kb is ua_kb
    assert len(result.bundle.entries) == 5
    assert result.manifest["k"] == 5
    assert result.manifest["t"] == 25
    assert result.manifest["query"] == "Identify all Events with Level: Warning."
    assert result.manifest["fingerprint"] == "hash-trigram:1024"
    ranks = [score["rank"] for score in result.manifest["scores"]]
    assert ranks == [1, 2, 3, 4, 5]
    assert result.report.body.startswith("Event Timeline Reconstructed")
    assert result.report.truncated is False


def test_analyze_kb_defaults_k_to_the_full_store(ua_kb):
    result = analyze_kb(ua_kb, "q", HashEmbedder(), MockGenerator())
    assert result.manifest["k"] == 25
    assert len(result.bundle.entries) == 25


def test_analyze_kb_rejects_blank_query(ua_kb):
    with pytest.raises(PipelineError) as excinfo:
        analyze_kb(ua_kb, "  ", HashEmbedder(), MockGenerator())
    assert "embed" in str(excinfo.value)


def test_manifest_is_timestamp_free(ua_kb):
    result = analyze_kb(ua_kb, "q", HashEmbedder(), MockGenerator(), k=3)
    manifest = result.manifest
    assert set(manifest) == {"query", "k", "t", "model", "fingerprint", "scores"}
    again = analyze_kb(ua_kb, "q", HashEmbedder(), MockGenerator(), k=3).manifest
    assert again == manifest
    rebuilt = build_manifest(
        "q", 3, ua_kb, result.report.provenance.model, result.bundle
    )
    assert rebuilt == manifest


def test_run_pipeline_from_a_document_file(tmp_path):
    from timeliner.events import parse_incident_csv, render_incident_document

    incident = parse_incident_csv(scenario_csv("unauthorised_access"))
    document = render_incident_document(incident, splitter=". ")
    path = tmp_path / "ua.txt"
    path.write_text(document.text, encoding="utf-8")
    config = load_config(environ={}, overrides={"chunk.max_length": 208})
    result = run_pipeline(
        config, path, mock=True, scenario_label="unauthorised_access"
    )
    assert result.kb.t == 25
    assert result.kb.scenario_label == "unauthorised_access"
    assert result.manifest["model"] == "mock-template"
    assert result.manifest["query"]  # the standard question was filled in
    second = run_pipeline(
        config, path, mock=True, scenario_label="unauthorised_access"
    )
    assert second.report.body == result.report.body
    assert second.manifest == result.manifest
