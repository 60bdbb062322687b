"""Exception hierarchy and exit-code policy.

Every error raised by this package derives from TimelineError. The two
broad families matter to callers: DataError means the input violated a
contract (bad rows, oversized events, corrupt files), TransportError
means a remote provider could not be reached or answered nonsense.
The command line maps usage mistakes to exit 1, data errors to exit 2
and transport errors to exit 3.
"""

from __future__ import annotations


class TimelineError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(TimelineError):
    """Bad invocation: unknown option, missing file, invalid configuration."""


class DataError(TimelineError):
    """Input data violated a documented contract."""


class TransportError(TimelineError):
    """A remote provider was unreachable or returned a malformed reply."""


class EmptyInput(DataError):
    """A source that must contain at least one record contained none."""


class RaggedRow(DataError):
    """A delimited row did not match the header width."""

    def __init__(self, message: str, row_number: int | None = None):
        super().__init__(message)
        self.row_number = row_number


class SplitterCollision(DataError):
    """An event's rendered text already contains the document splitter."""

    def __init__(self, message: str, ordinal: int | None = None):
        super().__init__(message)
        self.ordinal = ordinal


class EventTooLong(DataError):
    """An event exceeded the configured chunk length."""

    def __init__(self, message: str, ordinal: int | None = None):
        super().__init__(message)
        self.ordinal = ordinal


class TokenBudgetExceeded(DataError):
    """A text's estimated token count exceeded the embedder capacity."""

    def __init__(self, message: str, ordinal: int | None = None):
        super().__init__(message)
        self.ordinal = ordinal


class EmptyText(DataError):
    """Text submitted for embedding was empty or whitespace only."""


class DimensionMismatch(DataError):
    """Two vectors or a vector and a store disagreed on dimensionality."""


class ZeroVector(DataError):
    """A vector with zero magnitude reached a place that requires direction."""


class ProviderMismatch(DataError):
    """A query vector came from a different embedder than the stored matrix."""


class CorruptFile(DataError):
    """A persisted knowledge base failed structural or checksum validation."""


class EmptyEvidence(DataError):
    """Retrieval produced no evidence rows to attend over."""


class EmptyContext(DataError):
    """A context bundle contained no entries."""


class EmptyLedger(DataError):
    """A fact ledger contained no tallies."""


class EmptyResults(DataError):
    """A result set that must contain at least one row was empty."""


class FractionalVerdict(DataError):
    """An exact-match verdict was neither 0 nor 1."""


class OutOfRange(DataError):
    """A rate or verdict fell outside the closed unit interval."""


class ProviderUnavailable(TransportError):
    """The embedding endpoint stayed unreachable after retries."""


class GeneratorUnavailable(TransportError):
    """The text generation endpoint stayed unreachable after retries."""


class PipelineError(TimelineError):
    """A pipeline stage failed; wraps the original error with its stage name."""

    def __init__(self, stage: str, cause: TimelineError):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the documented process exit code."""
    if isinstance(exc, PipelineError):
        return exit_code_for(exc.cause)
    if isinstance(exc, UsageError):
        return 1
    if isinstance(exc, TransportError):
        return 3
    if isinstance(exc, DataError):
        return 2
    return 1
