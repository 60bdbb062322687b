"""Report generation: agent profile, prompt assembly and generators.

Two generators share one interface. The mock generator is a pure
function of its prompts: it reads the evidence lines back out of the
prompt's CONTEXT block and lays them out as a five-section incident
report, so tests and offline runs are fully deterministic. The remote
generator posts the same prompts to any HTTP endpoint speaking the
common chat-completions wire shape.
"""

from __future__ import annotations

import logging
import re
import time
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Protocol

import requests

from .attention import ContextBundle, entry_lines
from .errors import EmptyContext, GeneratorUnavailable, UsageError

logger = logging.getLogger(__name__)

DEFAULT_ROLE = "DFIR Timeline Analysis AI Assistant"
DEFAULT_SYSTEM_PROMPT = (
    "You are a DFIR AI assistant, tasked with analysing artefacts, correlating "
    "events, and producing a coherent timeline of the incident. Base your answer "
    "on the provided context and do not include additional information outside "
    "of the context given."
)
DEFAULT_QUERY = (
    "Conduct DFIR timeline analysis by examining the artefact, correlating "
    "events, and reconstructing the timeline of the cyber incident"
)

REPORT_HEADINGS = (
    "Event Timeline Reconstructed",
    "Anomalous Events and Trends",
    "Root Cause Analysis",
    "Mitigation Solutions",
    "Recommendations",
)

_SECTION_KEYS = {
    "Event Timeline Reconstructed": "timeline",
    "Anomalous Events and Trends": "anomalies",
    "Root Cause Analysis": "root_cause",
    "Mitigation Solutions": "mitigations",
    "Recommendations": "recommendations",
}

CONTEXT_HEADER = "CONTEXT:"
CONTEXT_FOOTER = "END CONTEXT"

DEFAULT_TEMPERATURE = 0.1
DEFAULT_MAX_TOKENS = 2000
DEFAULT_COMPLETIONS = 1
DEFAULT_LLM_TIMEOUT = 120.0


@dataclass(slots=True)
class AgentProfile:
    """Who the generator is told to be."""

    role_name: str = DEFAULT_ROLE
    system_prompt: str = DEFAULT_SYSTEM_PROMPT


@dataclass(slots=True)
class GenerationParams:
    """Decoding controls passed through to the generator."""

    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS
    completions: int = DEFAULT_COMPLETIONS
    model_name: str = ""

    def validate(self) -> None:
        if self.temperature < 0.0:
            raise UsageError(f"temperature must be >= 0, got {self.temperature}")
        if self.max_tokens < 1:
            raise UsageError(f"max_tokens must be >= 1, got {self.max_tokens}")
        if self.completions < 1:
            raise UsageError(f"completions must be >= 1, got {self.completions}")


@dataclass(frozen=True, slots=True)
class Provenance:
    """Enough metadata to re-run the generation that produced a report."""

    query: str
    k: int
    t: int
    model: str
    kb_fingerprint: str
    generated_at: str = ""


@dataclass(frozen=True, slots=True)
class GeneratedText:
    text: str
    truncated: bool = False


@dataclass(frozen=True, slots=True)
class TimelineReport:
    """A generated report plus its parsed sections and provenance."""

    body: str
    sections: dict[str, str]
    provenance: Provenance
    truncated: bool = False


class TextGenerator(Protocol):
    """What report generation needs from a language model."""

    model_name: str

    def generate(
        self, system_prompt: str, user_prompt: str, params: GenerationParams
    ) -> GeneratedText: ...


def build_agent_prompt(
    profile: AgentProfile, bundle: ContextBundle, user_query: str
) -> tuple[str, str]:
    """Assemble the (system, user) prompt pair for one query.

    The user prompt carries the query, the ranked evidence between
    CONTEXT markers, and the required report headings. Every entry line
    quotes the stored chunk text verbatim, which is what keeps the
    generator grounded in retrieved evidence.
    """
    if not bundle.entries:
        raise EmptyContext("cannot build a prompt from an empty context bundle")
    if not user_query or not user_query.strip():
        raise UsageError("user query must be non-empty")
    lines = [
        f"QUERY: {user_query.strip()}",
        "",
        CONTEXT_HEADER,
        *entry_lines(bundle.entries),
        CONTEXT_FOOTER,
        "",
        "Write an incident report with exactly these sections:",
        *[f"{i}. {heading}" for i, heading in enumerate(REPORT_HEADINGS, start=1)],
        "",
        "Use only events from the context above.",
    ]
    return profile.system_prompt, "\n".join(lines)


_ENTRY_PATTERN = re.compile(r"^\[(\d+)\] \(score=(-?\d+\.\d+)\) (.*)$")
_KEY_PATTERN = re.compile(r"^[A-Za-z][A-Za-z0-9 &/-]*$")


def parse_context_block(user_prompt: str) -> list[tuple[int, float, str]]:
    """Recover (rank, score, text) entries from a prompt's CONTEXT block."""
    try:
        start = user_prompt.index(CONTEXT_HEADER)
        end = user_prompt.index(CONTEXT_FOOTER, start)
    except ValueError:
        raise EmptyContext("prompt has no CONTEXT block") from None
    block = user_prompt[start + len(CONTEXT_HEADER) : end]
    entries: list[tuple[int, float, str]] = []
    for line in block.splitlines():
        match = _ENTRY_PATTERN.match(line.strip())
        if match:
            entries.append((int(match.group(1)), float(match.group(2)), match.group(3)))
    if not entries:
        raise EmptyContext("CONTEXT block holds no entries")
    return entries


def parse_attribute_pairs(text: str) -> dict[str, str]:
    """Split an event line back into its named attributes.

    Segments are comma-space separated; a segment without a plausible
    ``Name: `` prefix is folded into the previous value, so values that
    legitimately contain commas survive.
    """
    pairs: dict[str, str] = {}
    last_key: str | None = None
    for segment in text.split(", "):
        key, sep, value = segment.partition(": ")
        if sep and _KEY_PATTERN.match(key):
            pairs[key] = value
            last_key = key
        elif last_key is not None:
            pairs[last_key] += ", " + segment
    return pairs


class MockGenerator:
    """Deterministic template generator driven only by the prompt."""

    model_name = "mock-template"

    def generate(
        self, system_prompt: str, user_prompt: str, params: GenerationParams
    ) -> GeneratedText:
        params.validate()
        entries = parse_context_block(user_prompt)
        parsed = [
            (rank, score, text, parse_attribute_pairs(text))
            for rank, score, text in entries
        ]
        body = "\n".join(
            [
                self._timeline_section(parsed),
                "",
                self._anomaly_section(parsed),
                "",
                self._root_cause_section(parsed),
                "",
                self._mitigation_section(),
                "",
                self._recommendation_section(),
            ]
        )
        return GeneratedText(text=body + "\n", truncated=False)

    @staticmethod
    def _describe(text: str, attrs: dict[str, str]) -> str:
        details = attrs.get("Details") or attrs.get("Subject") or text
        event_id = attrs.get("Event ID")
        source = attrs.get("Source") or attrs.get("From")
        line = f"Event ID {event_id}: {details}" if event_id else details
        if source:
            line += f" (Source: {source})"
        return line

    def _timeline_section(self, parsed) -> str:
        ordered = sorted(
            parsed, key=lambda item: (item[3].get("Date and Time", ""), item[0])
        )
        lines = [REPORT_HEADINGS[0], ""]
        for rank, _score, text, attrs in ordered:
            stamp = attrs.get("Date and Time", "time unknown")
            lines.append(f"- {stamp}: {self._describe(text, attrs)}")
        return "\n".join(lines)

    def _anomaly_section(self, parsed) -> str:
        lines = [REPORT_HEADINGS[1], ""]
        levels = Counter(
            attrs["Level"] for _r, _s, _t, attrs in parsed if "Level" in attrs
        )
        for level in sorted(levels):
            lines.append(f"- Level {level}: {levels[level]} event(s) in context")
        ids = Counter(
            attrs["Event ID"] for _r, _s, _t, attrs in parsed if "Event ID" in attrs
        )
        for event_id in sorted(ids):
            if ids[event_id] > 1:
                lines.append(
                    f"- Event ID {event_id} recurs {ids[event_id]} times, "
                    "suggesting a sustained pattern"
                )
        if len(lines) == 2:
            lines.append("- No level or recurrence patterns stand out in the context")
        return "\n".join(lines)

    def _root_cause_section(self, parsed) -> str:
        lines = [REPORT_HEADINGS[2], ""]
        stamps = sorted(
            attrs["Date and Time"]
            for _r, _s, _t, attrs in parsed
            if attrs.get("Date and Time")
        )
        if stamps:
            lines.append(
                f"- Activity in context spans {stamps[0]} through {stamps[-1]}"
            )
        sources = Counter(
            attrs["Source"] for _r, _s, _t, attrs in parsed if attrs.get("Source")
        )
        if sources:
            top = sorted(sources.items(), key=lambda kv: (-kv[1], kv[0]))[0]
            lines.append(
                f"- The most frequent source is {top[0]} "
                f"({top[1]} of {len(parsed)} events)"
            )
        top_rank = min(parsed, key=lambda item: item[0])
        lines.append(
            "- The event most aligned with the query is: "
            + self._describe(top_rank[2], top_rank[3])
        )
        return "\n".join(lines)

    @staticmethod
    def _mitigation_section() -> str:
        return "\n".join(
            [
                REPORT_HEADINGS[3],
                "",
                "- Isolate the affected hosts named in the timeline pending review",
                "- Rotate credentials referenced by the correlated events",
                "- Block or rate-limit the network sources implicated above",
                "- Preserve the original artefact for further forensic work",
            ]
        )

    @staticmethod
    def _recommendation_section() -> str:
        return "\n".join(
            [
                REPORT_HEADINGS[4],
                "",
                "- Review alerting thresholds for the event levels observed here",
                "- Re-run this analysis after remediation to confirm the pattern stops",
                "- Archive this report alongside the source artefact",
            ]
        )


class RemoteGenerator:
    """Client for an HTTP chat-completions endpoint."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        timeout: float = DEFAULT_LLM_TIMEOUT,
        retries: int = 3,
        backoff: float = 0.25,
        api_token: str | None = None,
        session: requests.Session | None = None,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self.endpoint = endpoint
        self.model = model
        self.model_name = model
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.api_token = api_token
        self.session = session or requests.Session()
        self.sleeper = sleeper

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_token:
            headers["Authorization"] = f"Bearer {self.api_token}"
        return headers

    def generate(
        self, system_prompt: str, user_prompt: str, params: GenerationParams
    ) -> GeneratedText:
        params.validate()
        payload = {
            "model": params.model_name or self.model,
            "messages": [
                {"role": "system", "content": system_prompt},
                {"role": "user", "content": user_prompt},
            ],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "n": params.completions,
        }
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
                choice = body["choices"][0]
                text = choice["message"]["content"]
                if not isinstance(text, str):
                    raise GeneratorUnavailable("endpoint returned non-text content")
                truncated = choice.get("finish_reason") == "length"
                if truncated:
                    logger.warning("generation stopped at the max_tokens limit")
                return GeneratedText(text=text, truncated=truncated)
            except GeneratorUnavailable:
                raise
            except (requests.RequestException, KeyError, IndexError, ValueError, TypeError) as exc:
                last_error = exc
                if attempt + 1 < attempts:
                    logger.warning(
                        "generation attempt %d/%d failed (%s), retrying in %.3fs",
                        attempt + 1,
                        attempts,
                        exc,
                        delay,
                    )
                    self.sleeper(delay)
                    delay *= 2
        raise GeneratorUnavailable(
            f"generation endpoint {self.endpoint} failed after {attempts} attempts: "
            f"{last_error}"
        ) from last_error


_HEADING_LINE = re.compile(r"^#{0,6}\s*(.+?)\s*:?\s*$")


def parse_report_sections(body: str) -> dict[str, str]:
    """Split a report body on the five known headings.

    Returns a mapping of canonical section key to section text. Headings
    may carry markdown marks or a trailing colon. Text before the first
    heading lands under ``preamble``. Missing sections are simply absent.
    """
    sections: dict[str, list[str]] = {}
    current = "preamble"
    for line in body.splitlines():
        match = _HEADING_LINE.match(line.strip())
        heading = match.group(1) if match else None
        if heading in _SECTION_KEYS:
            current = _SECTION_KEYS[heading]
            sections.setdefault(current, [])
            continue
        sections.setdefault(current, []).append(line)
    parsed = {
        key: "\n".join(lines).strip()
        for key, lines in sections.items()
        if key != "preamble" or "\n".join(lines).strip()
    }
    return parsed


def generate_report(
    generator: TextGenerator,
    system_prompt: str,
    user_prompt: str,
    params: GenerationParams,
    provenance: Provenance,
) -> TimelineReport:
    """Run one generation and wrap the result with parsed sections."""
    result = generator.generate(system_prompt, user_prompt, params)
    return TimelineReport(
        body=result.text,
        sections=parse_report_sections(result.text),
        provenance=provenance,
        truncated=result.truncated,
    )
