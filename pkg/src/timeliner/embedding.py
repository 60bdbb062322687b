"""Text embedding providers.

Two providers share one small interface: a deterministic local hasher
used as the reference implementation (and in every test), and a client
for any HTTP endpoint speaking the common embeddings wire shape. Both
return unit-length float64 vectors of a fixed dimension.

The reference algorithm: lowercase the text, take every overlapping
three-character window (a text shorter than three characters is itself
the only window), hash each window's UTF-8 bytes with 64-bit FNV-1a,
add 1.0 to the vector slot at hash modulo dimension, then scale the
vector to unit length. Same text in, same vector out, on any platform.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Protocol, Sequence

import numpy as np
import requests

from .chunking import Chunk, estimate_tokens
from .errors import (
    DimensionMismatch,
    EmptyText,
    ProviderUnavailable,
    TokenBudgetExceeded,
    ZeroVector,
)

logger = logging.getLogger(__name__)

DEFAULT_DIMENSION = 1024
DEFAULT_TOKEN_CAPACITY = 512
DEFAULT_EMBED_TIMEOUT = 30.0
DEFAULT_BATCH_SIZE = 16
DEFAULT_RETRIES = 3
DEFAULT_BACKOFF = 0.25
DEFAULT_PARALLELISM = 4

FNV64_OFFSET_BASIS = 14695981039346656037
FNV64_PRIME = 1099511628211
_FNV64_MASK = (1 << 64) - 1


def fnv1a_64(data: bytes) -> int:
    """64-bit FNV-1a hash of a byte string."""
    value = FNV64_OFFSET_BASIS
    for byte in data:
        value ^= byte
        value = (value * FNV64_PRIME) & _FNV64_MASK
    return value


def character_trigrams(text: str) -> list[str]:
    """Overlapping 3-character windows; a short text is one window."""
    if len(text) < 3:
        return [text]
    return [text[i : i + 3] for i in range(len(text) - 2)]


class EmbeddingProvider(Protocol):
    """What retrieval needs from an embedder."""

    name: str
    dimension: int
    token_capacity: int

    def embed(self, text: str) -> np.ndarray: ...


class HashEmbedder:
    """Deterministic trigram-hash embedder, the local reference provider."""

    def __init__(
        self,
        dimension: int = DEFAULT_DIMENSION,
        token_capacity: int = DEFAULT_TOKEN_CAPACITY,
    ):
        if dimension < 1:
            raise DimensionMismatch(f"dimension must be >= 1, got {dimension}")
        self.name = "hash-trigram"
        self.dimension = dimension
        self.token_capacity = token_capacity

    def embed(self, text: str) -> np.ndarray:
        vector = np.zeros(self.dimension, dtype=np.float64)
        for gram in character_trigrams(text.lower()):
            slot = fnv1a_64(gram.encode("utf-8")) % self.dimension
            vector[slot] += 1.0
        norm = float(np.linalg.norm(vector))
        if norm == 0.0:
            raise ZeroVector("hashed text produced a zero vector")
        return vector / norm


class RemoteEmbedder:
    """Client for an HTTP embeddings endpoint.

    Sends ``{"model": ..., "input": [texts]}`` and expects a JSON body
    whose ``data`` list carries one ``{"embedding": [...]}`` per input,
    index-aligned. Transient failures are retried with exponential
    backoff; after the retry budget the caller gets ProviderUnavailable.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        dimension: int = DEFAULT_DIMENSION,
        token_capacity: int = DEFAULT_TOKEN_CAPACITY,
        timeout: float = DEFAULT_EMBED_TIMEOUT,
        batch_size: int = DEFAULT_BATCH_SIZE,
        retries: int = DEFAULT_RETRIES,
        backoff: float = DEFAULT_BACKOFF,
        parallelism: int = DEFAULT_PARALLELISM,
        api_token: str | None = None,
        session: requests.Session | None = None,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self.endpoint = endpoint
        self.model = model
        self.name = model
        self.dimension = dimension
        self.token_capacity = token_capacity
        self.timeout = timeout
        self.batch_size = batch_size
        self.retries = retries
        self.backoff = backoff
        self.parallelism = parallelism
        self.api_token = api_token
        self.session = session or requests.Session()
        self.sleeper = sleeper

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_token:
            headers["Authorization"] = f"Bearer {self.api_token}"
        return headers

    def _post_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        payload = {"model": self.model, "input": list(texts)}
        attempts = self.retries + 1
        delay = self.backoff
        last_error: Exception | None = None
        for attempt in range(attempts):
            try:
                response = self.session.post(
                    self.endpoint,
                    json=payload,
                    headers=self._headers(),
                    timeout=self.timeout,
                )
                response.raise_for_status()
                body = response.json()
                rows = body["data"]
                if len(rows) != len(texts):
                    raise ProviderUnavailable(
                        f"endpoint returned {len(rows)} embeddings for "
                        f"{len(texts)} inputs"
                    )
                return [
                    np.asarray(row["embedding"], dtype=np.float64) for row in rows
                ]
            except ProviderUnavailable:
                raise
            except (requests.RequestException, KeyError, ValueError, TypeError) as exc:
                last_error = exc
                if attempt + 1 < attempts:
                    logger.warning(
                        "embedding attempt %d/%d failed (%s), retrying in %.3fs",
                        attempt + 1,
                        attempts,
                        exc,
                        delay,
                    )
                    self.sleeper(delay)
                    delay *= 2
        raise ProviderUnavailable(
            f"embedding endpoint {self.endpoint} failed after {attempts} attempts: "
            f"{last_error}"
        ) from last_error

    def embed(self, text: str) -> np.ndarray:
        return self._post_batch([text])[0]

    def embed_many(self, texts: Sequence[str]) -> list[np.ndarray]:
        """Embed a sequence in batches, preserving input order."""
        batches = [
            texts[i : i + self.batch_size]
            for i in range(0, len(texts), self.batch_size)
        ]
        if len(batches) <= 1:
            return self._post_batch(texts) if texts else []
        with ThreadPoolExecutor(max_workers=self.parallelism) as pool:
            results = list(pool.map(self._post_batch, batches))
        return [vector for batch in results for vector in batch]


def provider_fingerprint(provider: EmbeddingProvider) -> str:
    """Identity string a stored matrix records about its embedder."""
    return f"{provider.name}:{provider.dimension}"


def _validate_vector(vector: np.ndarray, dimension: int, label: str) -> np.ndarray:
    vector = np.asarray(vector, dtype=np.float64)
    if vector.ndim != 1 or vector.shape[0] != dimension:
        raise DimensionMismatch(
            f"{label}: provider returned shape {vector.shape}, expected ({dimension},)"
        )
    if not np.all(np.isfinite(vector)):
        raise DimensionMismatch(f"{label}: provider returned non-finite values")
    if float(np.linalg.norm(vector)) == 0.0:
        raise ZeroVector(f"{label}: provider returned a zero vector")
    return vector


def embed_text(provider: EmbeddingProvider, text: str) -> np.ndarray:
    """Embed one text, enforcing the provider's contracts.

    Raises EmptyText for empty or whitespace-only input and
    TokenBudgetExceeded when the estimated token cost is over the
    provider capacity. The returned vector is validated to be finite,
    non-zero and of the provider's dimension.
    """
    if not text or not text.strip():
        raise EmptyText("cannot embed empty text")
    tokens = estimate_tokens(text)
    if tokens > provider.token_capacity:
        raise TokenBudgetExceeded(
            f"text estimates {tokens} tokens, capacity is {provider.token_capacity}"
        )
    return _validate_vector(provider.embed(text), provider.dimension, "embed_text")


def embed_chunks(provider: EmbeddingProvider, chunks: Sequence[Chunk]) -> np.ndarray:
    """Embed every chunk into a (t, dimension) float64 matrix.

    Row i is exactly the vector embed_text would return for chunk i's
    stripped text; the padding is a storage convention, not content, so
    it never reaches the provider. Errors are tagged with the offending
    chunk's ordinal. An empty chunk list gives a (0, dimension) matrix.
    """
    if not chunks:
        return np.empty((0, provider.dimension), dtype=np.float64)
    for chunk in chunks:
        if not chunk.stripped_text:
            raise EmptyText(f"chunk {chunk.ordinal} is empty")
        if chunk.token_estimate > provider.token_capacity:
            raise TokenBudgetExceeded(
                f"chunk {chunk.ordinal} estimates {chunk.token_estimate} tokens, "
                f"capacity is {provider.token_capacity}",
                ordinal=chunk.ordinal,
            )
    texts = [chunk.stripped_text for chunk in chunks]
    if hasattr(provider, "embed_many"):
        raw = provider.embed_many(texts)
    else:
        raw = [provider.embed(text) for text in texts]
    matrix = np.empty((len(chunks), provider.dimension), dtype=np.float64)
    for i, (chunk, vector) in enumerate(zip(chunks, raw)):
        matrix[i] = _validate_vector(
            vector, provider.dimension, f"chunk {chunk.ordinal}"
        )
    return matrix
