"""Fixed-length event chunking.

One event becomes exactly one chunk. Chunks share a single fixed
character length: shorter events are right-padded with spaces, and an
event longer than the limit is an error rather than a truncation,
because silently losing forensic detail is worse than failing loudly.
Token cost is estimated from character count with a flat chars-per-token
ratio; any chunk whose estimate exceeds the embedder capacity is
rejected up front so a batch never dies halfway through.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import EmptyInput, EventTooLong, TokenBudgetExceeded, UsageError
from .events import DEFAULT_SPLITTER, IncidentDocument, parse_incident_document

DEFAULT_CHARS_PER_TOKEN = 4
DEFAULT_TOKEN_CAPACITY = 512


@dataclass(slots=True)
class ChunkingConfig:
    """Controls for turning a rendered document into chunks.

    max_length of None means "derive from the data": the length of the
    longest event becomes the shared chunk length.
    """

    max_length: int | None = None
    c_avg: int = DEFAULT_CHARS_PER_TOKEN
    token_capacity: int = DEFAULT_TOKEN_CAPACITY
    splitter: str = DEFAULT_SPLITTER

    def validate(self) -> None:
        if self.max_length is not None and self.max_length < 1:
            raise UsageError(f"max_length must be >= 1, got {self.max_length}")
        if self.c_avg < 1:
            raise UsageError(f"c_avg must be >= 1, got {self.c_avg}")
        if self.token_capacity < 1:
            raise UsageError(f"token_capacity must be >= 1, got {self.token_capacity}")
        if not self.splitter:
            raise UsageError("splitter must be non-empty")
        if self.max_length is not None and self.max_length > self.token_capacity * self.c_avg:
            raise UsageError(
                f"max_length {self.max_length} cannot exceed "
                f"token_capacity * c_avg = {self.token_capacity * self.c_avg}"
            )


@dataclass(frozen=True, slots=True)
class Chunk:
    """One event, padded to the shared chunk length.

    text is the padded form fed to the embedder; stripped_text is the
    original event line; char_count and token_estimate describe the
    stripped text, not the padding.
    """

    text: str
    stripped_text: str
    ordinal: int
    char_count: int
    token_estimate: int


def event_length(text: str) -> int:
    """Character count of an event text, counting Unicode scalars."""
    return len(text)


def estimate_tokens(text: str, c_avg: int = DEFAULT_CHARS_PER_TOKEN) -> int:
    """Ceiling of character count over the chars-per-token ratio."""
    if c_avg < 1:
        raise UsageError(f"c_avg must be >= 1, got {c_avg}")
    return math.ceil(len(text) / c_avg)


def max_event_length(texts: Sequence[str]) -> int:
    """Length of the longest text; EmptyInput when there are none."""
    if not texts:
        raise EmptyInput("cannot derive a chunk length from zero events")
    return max(event_length(text) for text in texts)


def chunk_document(
    document: IncidentDocument | str, config: ChunkingConfig
) -> list[Chunk]:
    """Split a rendered document into one fixed-length chunk per event.

    The effective chunk length is config.max_length when set, otherwise
    the longest event's length. Every chunk text is exactly that long,
    padded on the right with spaces. Raises EventTooLong when an event
    exceeds a configured max_length, TokenBudgetExceeded when a chunk's
    token estimate is over the embedder capacity, and EmptyInput when
    the document contains no events.
    """
    config.validate()
    text = document.text if isinstance(document, IncidentDocument) else document
    segments = parse_incident_document(text, config.splitter)
    if not segments:
        raise EmptyInput("document contains no events")
    effective_length = (
        config.max_length if config.max_length is not None else max_event_length(segments)
    )
    chunks: list[Chunk] = []
    for index, segment in enumerate(segments):
        ordinal = index + 1
        count = event_length(segment)
        if count > effective_length:
            raise EventTooLong(
                f"event {ordinal} is {count} chars, limit is {effective_length}",
                ordinal=ordinal,
            )
        tokens = estimate_tokens(segment, config.c_avg)
        if tokens > config.token_capacity:
            raise TokenBudgetExceeded(
                f"event {ordinal} estimates {tokens} tokens, "
                f"capacity is {config.token_capacity}",
                ordinal=ordinal,
            )
        chunks.append(
            Chunk(
                text=segment.ljust(effective_length),
                stripped_text=segment,
                ordinal=ordinal,
                char_count=count,
                token_estimate=tokens,
            )
        )
    return chunks


def incident_total_length(chunks: Sequence[Chunk]) -> int:
    """Sum of stripped character counts across chunks."""
    return sum(chunk.char_count for chunk in chunks)


_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}


def _escape(text: str) -> str:
    for raw, escaped in _ESCAPES.items():
        text = text.replace(raw, escaped)
    return text


def _unescape(text: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            mapped = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}.get(nxt)
            if mapped is not None:
                out.append(mapped)
                i += 2
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def write_chunks_tsv(chunks: Sequence[Chunk], path: str | Path) -> None:
    """Write one tab-separated record per chunk.

    Columns: ordinal, char_count, token_estimate, stripped_text. Tabs,
    newlines and backslashes inside the text are backslash-escaped so
    arbitrary event text survives the round trip.
    """
    lines = [
        f"{c.ordinal}\t{c.char_count}\t{c.token_estimate}\t{_escape(c.stripped_text)}"
        for c in chunks
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_chunks_tsv(path: str | Path, max_length: int | None = None) -> list[Chunk]:
    """Read chunks written by write_chunks_tsv, re-padding each text.

    Padding width is ``max_length`` when given, else the largest
    char_count in the file.
    """
    rows: list[tuple[int, int, int, str]] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        ordinal_s, count_s, tokens_s, escaped = line.split("\t", 3)
        rows.append((int(ordinal_s), int(count_s), int(tokens_s), _unescape(escaped)))
    if not rows:
        raise EmptyInput(f"no chunk records in {path}")
    width = max_length if max_length is not None else max(r[1] for r in rows)
    return [
        Chunk(
            text=stripped.ljust(width),
            stripped_text=stripped,
            ordinal=ordinal,
            char_count=count,
            token_estimate=tokens,
        )
        for ordinal, count, tokens, stripped in rows
    ]
