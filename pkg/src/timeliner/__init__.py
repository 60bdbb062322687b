"""Incident timeline analysis.

Turn a raw event export into a ranked, attention-weighted evidence
context and a structured timeline report, then score the run. The
public surface re-exported here covers the usual flow: parse events,
chunk the document, embed, retrieve, attend, generate, evaluate.
"""

from .agent import (
    AgentProfile,
    DEFAULT_QUERY,
    DEFAULT_SYSTEM_PROMPT,
    GenerationParams,
    MockGenerator,
    RemoteGenerator,
    TimelineReport,
    build_agent_prompt,
    generate_report,
)
from .attention import (
    AttentionWeights,
    ContextBundle,
    ContextEntry,
    assemble_context,
    attention_weights,
    softmax_weights,
    weighted_context,
)
from .chunking import Chunk, ChunkingConfig, chunk_document, estimate_tokens
from .config import RunConfig, load_config
from .embedding import (
    HashEmbedder,
    RemoteEmbedder,
    embed_chunks,
    embed_text,
    provider_fingerprint,
)
from .errors import (
    DataError,
    PipelineError,
    TimelineError,
    TransportError,
    UsageError,
    exit_code_for,
)
from .events import (
    Event,
    EventAttribute,
    Incident,
    IncidentDocument,
    parse_incident_csv,
    parse_incident_document,
    render_event,
    render_incident_document,
)
from .evaluation import (
    EvidenceGroundTruth,
    FactLedger,
    MetricReport,
    PromptResult,
    accuracy,
    exact_match,
    export_evidence_projection,
    overall_performance,
    relevance,
    topk_evidence_check,
)
from .knowledge_base import (
    EvidenceHit,
    EvidenceSet,
    KnowledgeBase,
    cosine_similarity,
    load_kb,
    save_kb,
    score_all,
    top_k,
)
from .pipeline import PipelineResult, analyze_kb, build_kb_from_document, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "AgentProfile",
    "AttentionWeights",
    "Chunk",
    "ChunkingConfig",
    "ContextBundle",
    "ContextEntry",
    "DataError",
    "DEFAULT_QUERY",
    "DEFAULT_SYSTEM_PROMPT",
    "Event",
    "EventAttribute",
    "EvidenceGroundTruth",
    "EvidenceHit",
    "EvidenceSet",
    "FactLedger",
    "GenerationParams",
    "HashEmbedder",
    "Incident",
    "IncidentDocument",
    "KnowledgeBase",
    "MetricReport",
    "MockGenerator",
    "PipelineError",
    "PipelineResult",
    "PromptResult",
    "RemoteEmbedder",
    "RemoteGenerator",
    "RunConfig",
    "TimelineError",
    "TimelineReport",
    "TransportError",
    "UsageError",
    "accuracy",
    "analyze_kb",
    "assemble_context",
    "attention_weights",
    "build_agent_prompt",
    "build_kb_from_document",
    "chunk_document",
    "cosine_similarity",
    "embed_chunks",
    "embed_text",
    "estimate_tokens",
    "exact_match",
    "exit_code_for",
    "export_evidence_projection",
    "generate_report",
    "load_config",
    "load_kb",
    "overall_performance",
    "parse_incident_csv",
    "parse_incident_document",
    "provider_fingerprint",
    "relevance",
    "render_event",
    "render_incident_document",
    "run_pipeline",
    "save_kb",
    "score_all",
    "softmax_weights",
    "top_k",
    "topk_evidence_check",
    "weighted_context",
]
