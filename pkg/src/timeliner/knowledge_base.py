"""Vector knowledge base: storage, similarity scoring and top-k retrieval.

The store is one dense float64 matrix, row i holding the embedding of
chunk i, plus the chunk records themselves and the fingerprint of the
embedder that produced the matrix. Scoring a query against the store is
a single matrix-vector product over pre-normalized rows, so retrieval
cost stays linear in the number of events.

On disk the store is a single binary file (magic ``GDKB``) described in
docs/gdkb_format.md; a CRC-32 trailer makes truncation and bit rot loud.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .chunking import Chunk
from .errors import (
    CorruptFile,
    DimensionMismatch,
    EmptyEvidence,
    EmptyInput,
    ProviderMismatch,
    UsageError,
    ZeroVector,
)

MAGIC = b"GDKB"
FORMAT_VERSION = 1


@dataclass(frozen=True, slots=True)
class EvidenceHit:
    """One retrieved chunk: its ordinal, cosine score and 1-based rank."""

    ordinal: int
    score: float
    rank: int


@dataclass(frozen=True, slots=True)
class EvidenceSet:
    """Retrieval result, ranked best-first."""

    hits: tuple[EvidenceHit, ...]
    query_fingerprint: str = ""

    def __len__(self) -> int:
        return len(self.hits)

    def __iter__(self) -> Iterator[EvidenceHit]:
        return iter(self.hits)

    def __getitem__(self, index: int) -> EvidenceHit:
        return self.hits[index]

    def ordinals(self) -> list[int]:
        return [hit.ordinal for hit in self.hits]


class KnowledgeBase:
    """Chunks plus their embedding matrix, ready for scoring."""

    def __init__(
        self,
        chunks: Sequence[Chunk],
        matrix: np.ndarray,
        provider_fingerprint: str,
        scenario_label: str = "",
    ):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise DimensionMismatch(f"matrix must be 2-D, got shape {matrix.shape}")
        if len(chunks) != matrix.shape[0]:
            raise DimensionMismatch(
                f"{len(chunks)} chunks but {matrix.shape[0]} matrix rows"
            )
        if len(chunks) == 0:
            raise EmptyInput("knowledge base must hold at least one chunk")
        if not np.all(np.isfinite(matrix)):
            raise DimensionMismatch("matrix contains non-finite values")
        norms = np.linalg.norm(matrix, axis=1)
        if np.any(norms == 0.0):
            bad = int(np.argmin(norms)) + 1
            raise ZeroVector(f"matrix row for chunk {bad} has zero magnitude")
        self.chunks = tuple(chunks)
        self.matrix = matrix
        self.provider_fingerprint = provider_fingerprint
        self.scenario_label = scenario_label
        self._unit_rows = matrix / norms[:, None]

    @property
    def t(self) -> int:
        """Number of stored chunks."""
        return len(self.chunks)

    @property
    def dimension(self) -> int:
        return int(self.matrix.shape[1])

    def chunk_by_ordinal(self, ordinal: int) -> Chunk:
        if not 1 <= ordinal <= self.t:
            raise UsageError(f"ordinal {ordinal} outside 1..{self.t}")
        return self.chunks[ordinal - 1]

    def vectors_for(self, ordinals: Sequence[int]) -> np.ndarray:
        """Matrix rows for the given 1-based ordinals, in that order."""
        return self.matrix[[ordinal - 1 for ordinal in ordinals]]


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cosine similarity is undefined for a zero vector")
    value = float(np.dot(a, b) / (norm_a * norm_b))
    return max(-1.0, min(1.0, value))


def _check_query(kb: KnowledgeBase, query_vector: np.ndarray, fingerprint: str | None):
    query_vector = np.asarray(query_vector, dtype=np.float64)
    if query_vector.ndim != 1 or query_vector.shape[0] != kb.dimension:
        raise DimensionMismatch(
            f"query has shape {query_vector.shape}, store dimension is {kb.dimension}"
        )
    if float(np.linalg.norm(query_vector)) == 0.0:
        raise ZeroVector("query vector has zero magnitude")
    if fingerprint is not None and fingerprint != kb.provider_fingerprint:
        raise ProviderMismatch(
            f"query embedder {fingerprint!r} does not match stored "
            f"{kb.provider_fingerprint!r}"
        )
    return query_vector


def score_all(
    kb: KnowledgeBase,
    query_vector: np.ndarray,
    fingerprint: str | None = None,
) -> np.ndarray:
    """Cosine score of the query against every stored chunk.

    Index i of the result scores chunk ordinal i+1. Equivalent to
    calling cosine_similarity per row, but computed as one product over
    the pre-normalized matrix.
    """
    query_vector = _check_query(kb, query_vector, fingerprint)
    unit_query = query_vector / float(np.linalg.norm(query_vector))
    return np.clip(kb._unit_rows @ unit_query, -1.0, 1.0)


def top_k(
    kb: KnowledgeBase,
    query_vector: np.ndarray,
    k: int | None = None,
    fingerprint: str | None = None,
) -> EvidenceSet:
    """The k best-scoring chunks, ranked by score then by ordinal.

    k defaults to the store size and is clipped to it; ties in score
    resolve toward the earlier ordinal so results are reproducible.
    """
    if k is None:
        k = kb.t
    if k < 1:
        raise UsageError(f"k must be >= 1, got {k}")
    k = min(k, kb.t)
    scores = score_all(kb, query_vector, fingerprint)
    order = sorted(range(kb.t), key=lambda i: (-scores[i], i))[:k]
    hits = tuple(
        EvidenceHit(ordinal=i + 1, score=float(scores[i]), rank=rank + 1)
        for rank, i in enumerate(order)
    )
    if not hits:
        raise EmptyEvidence("retrieval produced no evidence")
    return EvidenceSet(hits=hits, query_fingerprint=kb.provider_fingerprint)


def _pack_str(text: str) -> bytes:
    data = text.encode("utf-8")
    return struct.pack("<I", len(data)) + data


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, count: int) -> bytes:
        if self.offset + count > len(self.data):
            raise CorruptFile("file is truncated")
        piece = self.data[self.offset : self.offset + count]
        self.offset += count
        return piece

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def string(self) -> str:
        length = self.u32()
        try:
            return self.take(length).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptFile(f"undecodable string field: {exc}") from exc


def save_kb(kb: KnowledgeBase, path: str | Path) -> None:
    """Write the store to one self-describing binary file.

    Layout: magic, format version, dimension, chunk count, shared chunk
    length, embedder fingerprint, scenario label, the row-major float64
    little-endian matrix, one record per chunk (ordinal, char count,
    token estimate, stripped text), and a trailing CRC-32 of everything
    before it.
    """
    max_length = len(kb.chunks[0].text)
    parts: list[bytes] = [
        MAGIC,
        struct.pack("<H", FORMAT_VERSION),
        struct.pack("<I", kb.dimension),
        struct.pack("<I", kb.t),
        struct.pack("<I", max_length),
        _pack_str(kb.provider_fingerprint),
        _pack_str(kb.scenario_label),
        np.ascontiguousarray(kb.matrix, dtype="<f8").tobytes(),
    ]
    for chunk in kb.chunks:
        parts.append(struct.pack("<III", chunk.ordinal, chunk.char_count, chunk.token_estimate))
        parts.append(_pack_str(chunk.stripped_text))
    body = b"".join(parts)
    body += struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
    Path(path).write_bytes(body)


def load_kb(path: str | Path) -> KnowledgeBase:
    """Read a store written by save_kb, verifying structure and checksum."""
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + 4:
        raise CorruptFile(f"{path}: file too small to be a knowledge base")
    if data[:4] != MAGIC:
        raise CorruptFile(f"{path}: bad magic, not a knowledge base file")
    stored_crc = struct.unpack("<I", data[-4:])[0]
    actual_crc = zlib.crc32(data[:-4]) & 0xFFFFFFFF
    if stored_crc != actual_crc:
        raise CorruptFile(
            f"{path}: checksum mismatch, stored {stored_crc:#010x}, "
            f"computed {actual_crc:#010x}"
        )
    reader = _Reader(data[:-4])
    reader.take(4)
    version = reader.u16()
    if version != FORMAT_VERSION:
        raise CorruptFile(f"{path}: unsupported format version {version}")
    dimension = reader.u32()
    count = reader.u32()
    max_length = reader.u32()
    fingerprint = reader.string()
    scenario_label = reader.string()
    matrix_bytes = reader.take(count * dimension * 8)
    matrix = np.frombuffer(matrix_bytes, dtype="<f8").reshape(count, dimension).copy()
    chunks: list[Chunk] = []
    for _ in range(count):
        ordinal, char_count, tokens = struct.unpack("<III", reader.take(12))
        stripped = reader.string()
        chunks.append(
            Chunk(
                text=stripped.ljust(max_length),
                stripped_text=stripped,
                ordinal=ordinal,
                char_count=char_count,
                token_estimate=tokens,
            )
        )
    if reader.offset != len(reader.data):
        raise CorruptFile(f"{path}: {len(reader.data) - reader.offset} trailing bytes")
    return KnowledgeBase(
        chunks=chunks,
        matrix=matrix,
        provider_fingerprint=fingerprint,
        scenario_label=scenario_label,
    )
