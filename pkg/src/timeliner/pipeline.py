"""End-to-end pipeline: document in, timeline report out.

The stages run in a fixed order: chunk the rendered document, embed the
chunks into a store, embed the query, retrieve the top-k evidence,
weight it with scaled attention, assemble the context bundle, generate
the report. A failure in any stage surfaces as PipelineError tagged
with the stage name, wrapping the original error untouched.

Every run also produces a manifest: a small JSON object recording the
query, the retrieval sizes, the generator identity, the store
fingerprint and each hit's rank, score and weight. The manifest
contains no timestamps, so identical inputs serialize identically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import TYPE_CHECKING

from .agent import (
    AgentProfile,
    GenerationParams,
    Provenance,
    TextGenerator,
    TimelineReport,
    build_agent_prompt,
    generate_report,
)
from .attention import ContextBundle, assemble_context, attention_weights
from .chunking import chunk_document
from .embedding import EmbeddingProvider, embed_chunks, embed_text, provider_fingerprint
from .errors import PipelineError, TimelineError, UsageError
from .events import IncidentDocument
from .knowledge_base import KnowledgeBase, top_k

if TYPE_CHECKING:
    from .config import RunConfig


@dataclass(frozen=True, slots=True)
class PipelineResult:
    """A finished run: the report, its manifest and the working objects."""

    report: TimelineReport
    manifest: dict
    bundle: ContextBundle
    kb: KnowledgeBase


class _Stage:
    """Context manager that tags stage failures without masking them."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self) -> "_Stage":
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        if exc is not None and isinstance(exc, TimelineError):
            if isinstance(exc, PipelineError):
                return False
            raise PipelineError(self.name, exc) from exc
        return False


def _now_utc() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def build_manifest(
    query: str,
    k: int,
    kb: KnowledgeBase,
    model: str,
    bundle: ContextBundle,
) -> dict:
    """Provenance manifest for one run; deliberately timestamp-free."""
    return {
        "query": query,
        "k": k,
        "t": kb.t,
        "model": model,
        "fingerprint": kb.provider_fingerprint,
        "scores": [
            {
                "ordinal": entry.ordinal,
                "rank": rank,
                "score": entry.score,
                "weight": entry.weight,
            }
            for rank, entry in enumerate(bundle.entries, start=1)
        ],
    }


def manifest_json(manifest: dict) -> str:
    """Canonical serialization: stable key order, trailing newline."""
    return json.dumps(manifest, indent=2, sort_keys=True) + "\n"


def analyze_kb(
    kb: KnowledgeBase,
    query_text: str,
    embedder: EmbeddingProvider,
    generator: TextGenerator,
    k: int | None = None,
    profile: AgentProfile | None = None,
    params: GenerationParams | None = None,
) -> PipelineResult:
    """Run retrieval, attention and generation against an existing store."""
    profile = profile or AgentProfile()
    params = params or GenerationParams()
    with _Stage("embed-query"):
        query_vector = embed_text(embedder, query_text)
    with _Stage("retrieve"):
        evidence = top_k(kb, query_vector, k=k, fingerprint=provider_fingerprint(embedder))
    with _Stage("attention"):
        vectors = kb.vectors_for(evidence.ordinals())
        weights = attention_weights(query_vector, vectors, dimension=kb.dimension)
    with _Stage("assemble"):
        bundle = assemble_context(evidence, weights, kb, query_text)
        system_prompt, user_prompt = build_agent_prompt(profile, bundle, query_text)
    with _Stage("generate"):
        provenance = Provenance(
            query=query_text,
            k=len(evidence),
            t=kb.t,
            model=generator.model_name,
            kb_fingerprint=kb.provider_fingerprint,
            generated_at=_now_utc(),
        )
        report = generate_report(generator, system_prompt, user_prompt, params, provenance)
    manifest = build_manifest(query_text, len(evidence), kb, generator.model_name, bundle)
    return PipelineResult(report=report, manifest=manifest, bundle=bundle, kb=kb)


def build_kb_from_document(
    document: IncidentDocument | str,
    config: "RunConfig",
    embedder: EmbeddingProvider,
    scenario_label: str = "",
) -> KnowledgeBase:
    """Chunk and embed a rendered document into a knowledge base."""
    with _Stage("chunk"):
        chunks = chunk_document(document, config.chunking_config())
    with _Stage("embed"):
        matrix = embed_chunks(embedder, chunks)
    return KnowledgeBase(
        chunks=chunks,
        matrix=matrix,
        provider_fingerprint=provider_fingerprint(embedder),
        scenario_label=scenario_label,
    )


def run_pipeline(
    config: "RunConfig",
    document_path: str | Path,
    user_query: str | None = None,
    mock: bool = False,
    scenario_label: str = "",
) -> PipelineResult:
    """Full flow from a rendered incident document file to a report."""
    from .agent import DEFAULT_QUERY

    path = Path(document_path)
    if not path.is_file():
        raise UsageError(f"document not found: {path}")
    document = IncidentDocument(
        text=path.read_text(encoding="utf-8"), splitter=config.chunk.splitter
    )
    embedder = config.make_embedder(mock=mock)
    generator = config.make_generator(mock=mock)
    kb = build_kb_from_document(
        document, config, embedder, scenario_label=scenario_label or path.stem
    )
    return analyze_kb(
        kb,
        user_query or DEFAULT_QUERY,
        embedder=embedder,
        generator=generator,
        k=config.retrieval.k,
        profile=config.agent_profile(),
        params=config.generation_params(),
    )
