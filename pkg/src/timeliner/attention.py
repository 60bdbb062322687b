"""Scaled-dot attention over retrieved evidence.

The retrieved evidence vectors are weighted by how strongly each one
aligns with the query: logits are the query-evidence dot products
divided by the square root of the vector dimension, and a numerically
stabilized softmax turns them into weights that sum to one. The
weighted sum of evidence vectors is the fused context vector, and the
same weights order the human-readable context entries handed to the
report generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyContext, EmptyEvidence, UsageError
from .knowledge_base import EvidenceSet, KnowledgeBase


@dataclass(frozen=True, slots=True)
class AttentionWeights:
    """Softmax weights, index-aligned with the evidence that produced them."""

    weights: np.ndarray
    dimension: int

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True, slots=True)
class ContextEntry:
    """One evidence chunk as the generator will see it."""

    ordinal: int
    text: str
    score: float
    weight: float


@dataclass(frozen=True, slots=True)
class ContextBundle:
    """Everything retrieval hands to generation for one query."""

    entries: tuple[ContextEntry, ...]
    context_vector: np.ndarray
    query_text: str


def softmax_weights(logits: np.ndarray) -> np.ndarray:
    """Stabilized softmax: exponentials of max-shifted logits, normalized."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.size == 0:
        raise EmptyEvidence("no logits to normalize")
    shifted = logits - np.max(logits)
    exps = np.exp(shifted)
    return exps / np.sum(exps)


def attention_weights(
    query_vector: np.ndarray,
    evidence_vectors: np.ndarray,
    dimension: int | None = None,
) -> AttentionWeights:
    """Softmax of scaled query-evidence dot products.

    The scale is the square root of ``dimension`` (the vector width when
    not given). Weights are positive and sum to one; adding the same
    constant to every logit leaves them unchanged.
    """
    query_vector = np.asarray(query_vector, dtype=np.float64)
    evidence_vectors = np.asarray(evidence_vectors, dtype=np.float64)
    if evidence_vectors.ndim != 2 or evidence_vectors.shape[0] == 0:
        raise EmptyEvidence("evidence matrix must have at least one row")
    if query_vector.ndim != 1 or query_vector.shape[0] != evidence_vectors.shape[1]:
        raise DimensionMismatch(
            f"query shape {query_vector.shape} does not match evidence "
            f"shape {evidence_vectors.shape}"
        )
    if dimension is None:
        dimension = int(query_vector.shape[0])
    if dimension < 1:
        raise UsageError(f"dimension must be >= 1, got {dimension}")
    logits = (evidence_vectors @ query_vector) / math.sqrt(dimension)
    return AttentionWeights(weights=softmax_weights(logits), dimension=dimension)


def weighted_context(
    weights: AttentionWeights, evidence_vectors: np.ndarray
) -> np.ndarray:
    """Fused context vector: the weight-blended sum of evidence rows."""
    evidence_vectors = np.asarray(evidence_vectors, dtype=np.float64)
    if evidence_vectors.ndim != 2 or evidence_vectors.shape[0] != len(weights):
        raise DimensionMismatch(
            f"{len(weights)} weights for evidence shape {evidence_vectors.shape}"
        )
    return weights.weights @ evidence_vectors


def assemble_context(
    evidence: EvidenceSet,
    weights: AttentionWeights,
    kb: KnowledgeBase,
    query_text: str,
) -> ContextBundle:
    """Pair each retrieved chunk with its weight and fuse the vectors.

    Entries are ordered by descending weight, ties toward the earlier
    ordinal, so the generator sees the most relevant evidence first.
    """
    if len(evidence) == 0:
        raise EmptyEvidence("evidence set is empty")
    if len(weights) != len(evidence):
        raise DimensionMismatch(
            f"{len(weights)} weights for {len(evidence)} evidence hits"
        )
    vectors = kb.vectors_for(evidence.ordinals())
    entries = [
        ContextEntry(
            ordinal=hit.ordinal,
            text=kb.chunk_by_ordinal(hit.ordinal).stripped_text,
            score=hit.score,
            weight=float(weights.weights[i]),
        )
        for i, hit in enumerate(evidence)
    ]
    entries.sort(key=lambda entry: (-entry.weight, entry.ordinal))
    return ContextBundle(
        entries=tuple(entries),
        context_vector=weighted_context(weights, vectors),
        query_text=query_text,
    )


def write_context_bundle(bundle: ContextBundle, path: str | Path) -> None:
    """Write one tab-separated row per entry: ordinal, score, weight, text."""
    if not bundle.entries:
        raise EmptyContext("context bundle has no entries")
    lines = [
        f"{e.ordinal}\t{e.score:.6f}\t{e.weight:.6f}\t{e.text}"
        for e in bundle.entries
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def entry_lines(entries: Sequence[ContextEntry]) -> list[str]:
    """Render entries as ranked ``[rank] (score=...) text`` lines."""
    return [
        f"[{rank}] (score={entry.score:.6f}) {entry.text}"
        for rank, entry in enumerate(entries, start=1)
    ]
