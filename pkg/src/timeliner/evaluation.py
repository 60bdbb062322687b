"""Evaluation metrics for retrieval quality and report correctness.

Four rates summarize a run. Accuracy comes from fact ledgers: every
factual statement in a report is tallied as correct or incorrect, split
by whether the fact restates stored evidence or is model inference.
Relevance and exact-match come from graded prompt results. The top-k
rate checks that retrieval surfaced the evidence a scenario's criteria
demand. The overall figure is the plain mean of the four rates.

The projection export flattens a store's scores into plottable rows so
retrieval quality can be eyeballed as a scatter of rank against score.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DataError,
    EmptyLedger,
    EmptyResults,
    FractionalVerdict,
    OutOfRange,
    UsageError,
)
from .knowledge_base import EvidenceSet, KnowledgeBase, score_all

RELEVANCE = "relevance"
EXACT_MATCH = "exact_match"
_CATEGORIES = (RELEVANCE, EXACT_MATCH)


@dataclass(frozen=True, slots=True)
class FactLedger:
    """Per-scenario tallies of verified report facts.

    Facts that restate stored evidence count under ``kb``; facts the
    model inferred beyond the evidence count under ``llm``.
    """

    scenario: str
    kb_correct: int
    kb_incorrect: int
    llm_correct: int
    llm_incorrect: int

    def __post_init__(self) -> None:
        for name in ("kb_correct", "kb_incorrect", "llm_correct", "llm_incorrect"):
            if getattr(self, name) < 0:
                raise OutOfRange(f"{name} must be >= 0")

    @property
    def total_facts(self) -> int:
        return self.kb_correct + self.kb_incorrect + self.llm_correct + self.llm_incorrect


@dataclass(frozen=True, slots=True)
class PromptResult:
    """One graded prompt: its verdict in [0, 1] and grading category."""

    prompt_id: str
    prompt_text: str
    verdict: float
    category: str

    def __post_init__(self) -> None:
        if self.category not in _CATEGORIES:
            raise DataError(
                f"unknown category {self.category!r}, expected one of {_CATEGORIES}"
            )
        if not 0.0 <= self.verdict <= 1.0:
            raise OutOfRange(f"verdict {self.verdict} outside [0, 1]")


@dataclass(frozen=True, slots=True)
class EvidenceGroundTruth:
    """What retrieval should surface for one scenario's criteria prompt."""

    scenario: str
    criteria_prompt: str
    total_events: int
    expected_topk: int
    expected_ordinals: tuple[int, ...] | None = None


@dataclass(frozen=True, slots=True)
class TopkCheck:
    """Outcome of checking retrieved evidence against ground truth."""

    count_match: bool
    set_match: bool | None
    recall: float
    degenerate: bool = False


@dataclass(frozen=True, slots=True)
class MetricReport:
    """The four per-run rates and their mean."""

    accuracy_rate: float
    relevance_rate: float
    em_rate: float
    topk_rate: float
    overall: float


@dataclass(frozen=True, slots=True)
class ProjectionRecord:
    """One chunk flattened for plotting: rank on x, score on y."""

    ordinal: int
    score: float
    heat: float
    x: float
    y: float


def accuracy(ledger: FactLedger) -> float:
    """Fraction of all tallied facts that were correct."""
    if ledger.total_facts == 0:
        raise EmptyLedger(f"ledger for {ledger.scenario!r} holds no facts")
    return (ledger.kb_correct + ledger.llm_correct) / ledger.total_facts


def mean_accuracy(ledgers: Sequence[FactLedger]) -> float:
    """Mean of per-scenario accuracies, each scenario weighted equally."""
    if not ledgers:
        raise EmptyLedger("no fact ledgers supplied")
    return float(np.mean([accuracy(ledger) for ledger in ledgers]))


def relevance(results: Sequence[PromptResult]) -> float:
    """Mean verdict over relevance-graded prompts."""
    rows = [r for r in results if r.category == RELEVANCE]
    if not rows:
        raise EmptyResults("no relevance results supplied")
    return float(np.mean([r.verdict for r in rows]))


def exact_match(results: Sequence[PromptResult]) -> float:
    """Mean verdict over exact-match prompts; verdicts must be 0 or 1."""
    rows = [r for r in results if r.category == EXACT_MATCH]
    if not rows:
        raise EmptyResults("no exact-match results supplied")
    for row in rows:
        if row.verdict not in (0.0, 1.0):
            raise FractionalVerdict(
                f"prompt {row.prompt_id!r} has fractional verdict {row.verdict}"
            )
    return float(np.mean([r.verdict for r in rows]))


def topk_evidence_check(
    retrieved: EvidenceSet | Sequence[int], truth: EvidenceGroundTruth
) -> TopkCheck:
    """Compare retrieved evidence against a scenario's ground truth.

    count_match says whether the retrieval size equals the expected
    evidence count. With expected ordinals, recall is the fraction of
    them retrieved and set_match means recall is 1.0; without them,
    recall degrades to the count indicator and set_match is None. An
    empty expected set is degenerate and counts as full recall.
    """
    ordinals = (
        retrieved.ordinals() if isinstance(retrieved, EvidenceSet) else list(retrieved)
    )
    count_match = len(ordinals) == truth.expected_topk
    if truth.expected_ordinals is None:
        return TopkCheck(
            count_match=count_match,
            set_match=None,
            recall=1.0 if count_match else 0.0,
        )
    expected = set(truth.expected_ordinals)
    if not expected:
        return TopkCheck(
            count_match=count_match, set_match=True, recall=1.0, degenerate=True
        )
    recall = len(expected & set(ordinals)) / len(expected)
    return TopkCheck(count_match=count_match, set_match=recall == 1.0, recall=recall)


def overall_performance(
    accuracy_rate: float,
    relevance_rate: float,
    em_rate: float,
    topk_rate: float,
) -> MetricReport:
    """Bundle the four rates with their arithmetic mean."""
    rates = {
        "accuracy_rate": accuracy_rate,
        "relevance_rate": relevance_rate,
        "em_rate": em_rate,
        "topk_rate": topk_rate,
    }
    for name, value in rates.items():
        if not 0.0 <= value <= 1.0:
            raise OutOfRange(f"{name} {value} outside [0, 1]")
    overall = (accuracy_rate + relevance_rate + em_rate + topk_rate) / 4.0
    return MetricReport(overall=overall, **rates)


def export_evidence_projection(
    kb: KnowledgeBase,
    query_vector: np.ndarray,
    method: str = "rank-layout",
) -> list[ProjectionRecord]:
    """Flatten scores into plottable records, one per chunk, by ordinal.

    Record i belongs to ordinal i+1. The layout puts a chunk's 1-based
    rank (best score first, ties toward the earlier ordinal) on x and
    its raw score on y; heat is the score clamped to [0, 1].
    """
    if method != "rank-layout":
        raise UsageError(f"unknown projection method {method!r}")
    scores = score_all(kb, query_vector)
    order = sorted(range(kb.t), key=lambda i: (-scores[i], i))
    rank_of = {index: position + 1 for position, index in enumerate(order)}
    return [
        ProjectionRecord(
            ordinal=i + 1,
            score=float(scores[i]),
            heat=float(min(1.0, max(0.0, scores[i]))),
            x=float(rank_of[i]),
            y=float(scores[i]),
        )
        for i in range(kb.t)
    ]


def scan_evidence_ordinals(kb: KnowledgeBase, needle: str) -> list[int]:
    """Ordinals of chunks whose stripped text contains ``needle``."""
    if not needle:
        raise UsageError("scan needle must be non-empty")
    return [
        chunk.ordinal for chunk in kb.chunks if needle in chunk.stripped_text
    ]


@dataclass(frozen=True, slots=True)
class TopkRecord:
    """One scenario row of a retrieval-check results file."""

    truth: EvidenceGroundTruth
    retrieved_count: int
    retrieved_ordinals: tuple[int, ...] | None = None

    def check(self) -> TopkCheck:
        retrieved = (
            list(self.retrieved_ordinals)
            if self.retrieved_ordinals is not None
            else list(range(1, self.retrieved_count + 1))
        )
        if self.retrieved_ordinals is None:
            truth = EvidenceGroundTruth(
                scenario=self.truth.scenario,
                criteria_prompt=self.truth.criteria_prompt,
                total_events=self.truth.total_events,
                expected_topk=self.truth.expected_topk,
                expected_ordinals=None,
            )
            return topk_evidence_check(retrieved, truth)
        return topk_evidence_check(retrieved, self.truth)


def topk_rate(records: Sequence[TopkRecord]) -> float:
    """Mean per-scenario retrieval score: recall when ordinals are known,
    otherwise the count-match indicator."""
    if not records:
        raise EmptyResults("no retrieval-check records supplied")
    return float(np.mean([record.check().recall for record in records]))


def _data_lines(path: str | Path) -> list[list[str]]:
    lines: list[list[str]] = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        lines.append(raw.split("\t"))
    return lines


_LEDGER_COUNT_HEADER = ["scenario", "kb_correct", "kb_incorrect", "llm_correct", "llm_incorrect"]
_LEDGER_FACT_HEADER = ["scenario", "source", "verdict", "fact"]
_PROMPT_HEADER = ["prompt_id", "category", "verdict", "prompt_text"]
_TOPK_HEADER = [
    "scenario",
    "criteria_prompt",
    "total_events",
    "expected_topk",
    "retrieved_topk",
    "expected_ordinals",
    "retrieved_ordinals",
]

_TRUTHY = {"correct", "1", "true", "yes"}
_FALSY = {"incorrect", "0", "false", "no"}


def load_fact_ledgers(path: str | Path) -> list[FactLedger]:
    """Load per-scenario fact tallies from a tab-separated file.

    Two layouts are accepted, told apart by the header row: pre-tallied
    counts (scenario, kb_correct, kb_incorrect, llm_correct,
    llm_incorrect) or one fact per row (scenario, source, verdict, fact)
    which this function tallies. Scenario order follows first appearance.
    """
    lines = _data_lines(path)
    if not lines:
        raise EmptyLedger(f"{path}: no rows")
    header, rows = lines[0], lines[1:]
    if not rows:
        raise EmptyLedger(f"{path}: header but no data rows")
    if header == _LEDGER_COUNT_HEADER:
        ledgers = []
        for row in rows:
            if len(row) != 5:
                raise DataError(f"{path}: expected 5 columns, got {len(row)}: {row!r}")
            ledgers.append(
                FactLedger(
                    scenario=row[0],
                    kb_correct=int(row[1]),
                    kb_incorrect=int(row[2]),
                    llm_correct=int(row[3]),
                    llm_incorrect=int(row[4]),
                )
            )
        return ledgers
    if header == _LEDGER_FACT_HEADER:
        tallies: dict[str, dict[str, int]] = {}
        for row in rows:
            if len(row) != 4:
                raise DataError(f"{path}: expected 4 columns, got {len(row)}: {row!r}")
            scenario, source, verdict, _fact = row
            if source not in ("kb", "llm"):
                raise DataError(f"{path}: fact source must be kb or llm, got {source!r}")
            if verdict.lower() in _TRUTHY:
                correct = True
            elif verdict.lower() in _FALSY:
                correct = False
            else:
                raise DataError(f"{path}: unreadable verdict {verdict!r}")
            bucket = tallies.setdefault(
                scenario,
                {"kb_correct": 0, "kb_incorrect": 0, "llm_correct": 0, "llm_incorrect": 0},
            )
            bucket[f"{source}_{'correct' if correct else 'incorrect'}"] += 1
        return [FactLedger(scenario=name, **counts) for name, counts in tallies.items()]
    raise DataError(f"{path}: unrecognized ledger header {header!r}")


def load_prompt_results(path: str | Path) -> list[PromptResult]:
    """Load graded prompts from a tab-separated file."""
    lines = _data_lines(path)
    if not lines:
        raise EmptyResults(f"{path}: no rows")
    header, rows = lines[0], lines[1:]
    if header != _PROMPT_HEADER:
        raise DataError(f"{path}: unrecognized header {header!r}")
    if not rows:
        raise EmptyResults(f"{path}: header but no data rows")
    results = []
    for row in rows:
        if len(row) != 4:
            raise DataError(f"{path}: expected 4 columns, got {len(row)}: {row!r}")
        results.append(
            PromptResult(
                prompt_id=row[0],
                category=row[1],
                verdict=float(row[2]),
                prompt_text=row[3],
            )
        )
    return results


def _parse_ordinals(cell: str) -> tuple[int, ...] | None:
    cell = cell.strip()
    if not cell:
        return None
    return tuple(int(piece) for piece in cell.split(","))


def load_topk_records(path: str | Path) -> list[TopkRecord]:
    """Load retrieval-check rows from a tab-separated file.

    The two ordinal columns hold comma-joined 1-based ordinals and may
    be empty when only counts were recorded.
    """
    lines = _data_lines(path)
    if not lines:
        raise EmptyResults(f"{path}: no rows")
    header, rows = lines[0], lines[1:]
    if header != _TOPK_HEADER:
        raise DataError(f"{path}: unrecognized header {header!r}")
    if not rows:
        raise EmptyResults(f"{path}: header but no data rows")
    records = []
    for row in rows:
        if len(row) != 7:
            raise DataError(f"{path}: expected 7 columns, got {len(row)}: {row!r}")
        records.append(
            TopkRecord(
                truth=EvidenceGroundTruth(
                    scenario=row[0],
                    criteria_prompt=row[1],
                    total_events=int(row[2]),
                    expected_topk=int(row[3]),
                    expected_ordinals=_parse_ordinals(row[5]),
                ),
                retrieved_count=int(row[4]),
                retrieved_ordinals=_parse_ordinals(row[6]),
            )
        )
    return records


def write_projection_tsv(records: Sequence[ProjectionRecord], path: str | Path) -> None:
    """Write projection records as a tab-separated table with a header."""
    lines = ["ordinal\tscore\theat\tx\ty"]
    lines += [
        f"{r.ordinal}\t{r.score:.6f}\t{r.heat:.6f}\t{r.x:.1f}\t{r.y:.6f}"
        for r in records
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def metric_report_json(report: MetricReport, per_scenario: dict[str, float]) -> str:
    """Serialize a metric report (and per-scenario accuracies) to JSON."""
    payload = {
        "accuracy_rate": report.accuracy_rate,
        "relevance_rate": report.relevance_rate,
        "em_rate": report.em_rate,
        "topk_rate": report.topk_rate,
        "overall": report.overall,
        "per_scenario_accuracy": per_scenario,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
