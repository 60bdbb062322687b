"""Incident event ingestion and document rendering.

An incident arrives as a delimited export (one row per event). Each row
becomes an ordered list of named attributes, each event renders to a
single line of ``Name: value`` pairs, and the whole incident renders to
one flat document string in which a splitter token terminates every
event. The splitter is what lets the chunker recover event boundaries
later, so rendering refuses any event whose own text contains it.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import EmptyInput, RaggedRow, SplitterCollision

logger = logging.getLogger(__name__)

ATTRIBUTE_SEPARATOR = ", "
KEY_VALUE_JOINER = ": "
DEFAULT_SPLITTER = ". "


@dataclass(frozen=True, slots=True)
class EventAttribute:
    """One named field of an event, e.g. name='Level', value='Warning'."""

    name: str
    value: str

    def __post_init__(self) -> None:
        if not self.name:
            raise EmptyInput("attribute name must be non-empty")

    def render(self) -> str:
        return f"{self.name}{KEY_VALUE_JOINER}{self.value}"


@dataclass(frozen=True, slots=True)
class Event:
    """An ordered collection of attributes plus its 1-based position."""

    attributes: tuple[EventAttribute, ...]
    ordinal: int

    def __post_init__(self) -> None:
        if self.ordinal < 1:
            raise EmptyInput(f"event ordinal must be >= 1, got {self.ordinal}")

    def attribute(self, name: str) -> str | None:
        """Return the value of the first attribute called ``name``, if any."""
        for attr in self.attributes:
            if attr.name == name:
                return attr.value
        return None


@dataclass(frozen=True, slots=True)
class Incident:
    """Every event of one incident, in source order."""

    events: tuple[Event, ...]
    source_label: str = ""

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)


@dataclass(frozen=True, slots=True)
class IncidentDocument:
    """A flat rendering of an incident, one splitter after every event."""

    text: str
    splitter: str = DEFAULT_SPLITTER
    attribute_separator: str = ATTRIBUTE_SEPARATOR


def _open_source(source: str | Path | IO[str]) -> tuple[IO[str], bool]:
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline=""), True
    if isinstance(source, io.TextIOBase) or hasattr(source, "read"):
        return source, False
    raise TypeError(f"unsupported source type: {type(source).__name__}")


def parse_incident_csv(
    source: str | Path | IO[str],
    has_header: bool = True,
    source_label: str = "",
) -> Incident:
    """Parse a comma-delimited event export into an Incident.

    With ``has_header`` the first row supplies attribute names; without
    it, names default to ``col1 .. colN``. Every data row must have
    exactly as many cells as there are names. Values are kept verbatim
    apart from stripping the surrounding whitespace the csv module
    already handles; cells may legitimately contain commas when quoted.

    Raises EmptyInput when no data rows exist and RaggedRow when a row
    width disagrees with the header.
    """
    handle, owned = _open_source(source)
    try:
        reader = csv.reader(handle)
        names: list[str] | None = None
        events: list[Event] = []
        for row in reader:
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if names is None:
                if has_header:
                    names = [
                        cell.strip() if cell.strip() else f"col{i + 1}"
                        for i, cell in enumerate(row)
                    ]
                    continue
                names = [f"col{i + 1}" for i in range(len(row))]
            if len(row) != len(names):
                raise RaggedRow(
                    f"row {reader.line_num} has {len(row)} cells, expected {len(names)}",
                    row_number=reader.line_num,
                )
            attrs = tuple(
                EventAttribute(name=name, value=cell.strip())
                for name, cell in zip(names, row)
            )
            events.append(Event(attributes=attrs, ordinal=len(events) + 1))
        if not events:
            raise EmptyInput("no event rows found in source")
        logger.debug("parsed %d events from %s", len(events), source_label or "stream")
        return Incident(events=tuple(events), source_label=source_label)
    finally:
        if owned:
            handle.close()


def render_event(event: Event, attribute_separator: str = ATTRIBUTE_SEPARATOR) -> str:
    """Render one event to a single ``Name: value, Name: value`` line."""
    if not event.attributes:
        raise EmptyInput(f"event {event.ordinal} has no attributes")
    return attribute_separator.join(attr.render() for attr in event.attributes)


def render_incident_document(
    incident: Incident,
    splitter: str = DEFAULT_SPLITTER,
    attribute_separator: str = ATTRIBUTE_SEPARATOR,
) -> IncidentDocument:
    """Render the whole incident to one string, a splitter after each event.

    The splitter terminates (not merely separates) events, so parsing
    the result back with the same splitter recovers exactly the rendered
    event texts. SplitterCollision is raised if any event's rendered
    text already contains the splitter, since that would corrupt the
    boundary structure.
    """
    if not splitter:
        raise EmptyInput("splitter must be non-empty")
    if not incident.events:
        raise EmptyInput("incident has no events")
    parts: list[str] = []
    for event in incident.events:
        rendered = render_event(event, attribute_separator)
        if splitter in rendered:
            raise SplitterCollision(
                f"event {event.ordinal} contains the splitter {splitter!r}",
                ordinal=event.ordinal,
            )
        parts.append(rendered + splitter)
    return IncidentDocument(
        text="".join(parts),
        splitter=splitter,
        attribute_separator=attribute_separator,
    )


def parse_incident_document(text: str, splitter: str) -> list[str]:
    """Split a rendered document back into stripped, non-empty event texts."""
    if not splitter:
        raise EmptyInput("splitter must be non-empty")
    segments = (segment.strip() for segment in text.split(splitter))
    return [segment for segment in segments if segment]


def iter_rendered_events(
    incident: Incident, attribute_separator: str = ATTRIBUTE_SEPARATOR
) -> Iterable[str]:
    """Yield each event's rendered line without assembling a document."""
    for event in incident.events:
        yield render_event(event, attribute_separator)
