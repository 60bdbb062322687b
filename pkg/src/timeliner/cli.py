"""Command-line interface.

Subcommands mirror the pipeline stages: ``ingest`` renders a CSV export
to a flat document, ``build-kb`` chunks and embeds a document into a
binary store, ``query`` ranks stored evidence against a question,
``analyze`` produces a timeline report plus its manifest, ``evidence``
exports the projection table with a scatter figure, and ``eval`` scores
run results into rate tables and bar charts.

Exit codes: 0 success, 1 usage problem, 2 bad data, 3 transport failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .agent import DEFAULT_QUERY
from .chunking import write_chunks_tsv
from .attention import write_context_bundle
from .config import CONFIG_KEYS, RunConfig, load_config
from .errors import TimelineError, UsageError, exit_code_for
from .evaluation import (
    accuracy,
    exact_match,
    export_evidence_projection,
    load_fact_ledgers,
    load_prompt_results,
    load_topk_records,
    mean_accuracy,
    overall_performance,
    metric_report_json,
    relevance,
    topk_rate,
    write_projection_tsv,
)
from .events import parse_incident_csv, render_incident_document
from .knowledge_base import load_kb, save_kb, top_k
from .embedding import embed_text, provider_fingerprint
from .pipeline import analyze_kb, build_kb_from_document, manifest_json
from .plotting import render_accuracy_figure, render_projection_figure, render_rates_figure

logger = logging.getLogger(__name__)

_FLAG_TO_KEY = {
    "embed_endpoint": "embed.endpoint",
    "embed_model": "embed.model",
    "embed_dimension": "embed.dimension",
    "embed_token_capacity": "embed.token_capacity",
    "llm_endpoint": "llm.endpoint",
    "llm_model": "llm.model",
    "llm_temperature": "llm.temperature",
    "llm_max_tokens": "llm.max_tokens",
    "llm_completions": "llm.completions",
    "splitter": "chunk.splitter",
    "max_length": "chunk.max_length",
    "c_avg": "chunk.c_avg",
    "k": "retrieval.k",
    "system_prompt": "agent.system_prompt",
    "kb_dir": "paths.kb_dir",
    "report_dir": "paths.report_dir",
}


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage mistakes as exit code 1, not 2."""

    def error(self, message: str):
        raise UsageError(message)


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="config file of key = value lines")
    parser.add_argument(
        "--mock",
        action="store_true",
        help="use the deterministic local embedder and template generator",
    )
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    remote = parser.add_argument_group("provider overrides")
    remote.add_argument("--embed-endpoint", metavar="URL")
    remote.add_argument("--embed-model", metavar="NAME")
    remote.add_argument("--embed-dimension", type=int, metavar="N")
    remote.add_argument("--embed-token-capacity", type=int, metavar="N")
    remote.add_argument("--llm-endpoint", metavar="URL")
    remote.add_argument("--llm-model", metavar="NAME")
    remote.add_argument("--llm-temperature", type=float, metavar="X")
    remote.add_argument("--llm-max-tokens", type=int, metavar="N")
    remote.add_argument("--llm-completions", type=int, metavar="N")
    shaping = parser.add_argument_group("chunking and retrieval")
    shaping.add_argument("--splitter", metavar="TEXT")
    shaping.add_argument("--max-length", type=int, metavar="N")
    shaping.add_argument("--c-avg", type=int, metavar="N")
    shaping.add_argument("--k", type=int, metavar="N")
    shaping.add_argument("--system-prompt", metavar="TEXT")
    shaping.add_argument("--kb-dir", metavar="DIR")
    shaping.add_argument("--report-dir", metavar="DIR")


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    overrides = {}
    for dest, key in _FLAG_TO_KEY.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = value
    return load_config(path=args.config, environ=os.environ, overrides=overrides)


def _require_file(path: str | Path, what: str) -> Path:
    resolved = Path(path)
    if not resolved.is_file():
        raise UsageError(f"{what} not found: {resolved}")
    return resolved


def _out_path(path: str | Path) -> Path:
    resolved = Path(path)
    if resolved.parent and not resolved.parent.exists():
        resolved.parent.mkdir(parents=True, exist_ok=True)
    return resolved


def cmd_ingest(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    source = _require_file(args.csv, "event export")
    incident = parse_incident_csv(
        source, has_header=not args.no_header, source_label=args.label or source.stem
    )
    document = render_incident_document(incident, splitter=config.chunk.splitter)
    out = _out_path(args.output)
    out.write_text(document.text, encoding="utf-8")
    print(f"events: {len(incident)}")
    print(f"splitter: {config.chunk.splitter!r}")
    print(f"written: {out}")
    return 0


def cmd_build_kb(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    source = _require_file(args.document, "incident document")
    embedder = config.make_embedder(mock=args.mock)
    kb = build_kb_from_document(
        source.read_text(encoding="utf-8"),
        config,
        embedder,
        scenario_label=args.label or source.stem,
    )
    out = _out_path(args.output)
    save_kb(kb, out)
    if args.chunks_out:
        write_chunks_tsv(kb.chunks, _out_path(args.chunks_out))
        print(f"chunks table: {args.chunks_out}")
    print(f"chunks: {kb.t}")
    print(f"chunk length: {len(kb.chunks[0].text)}")
    print(f"dimension: {kb.dimension}")
    print(f"fingerprint: {kb.provider_fingerprint}")
    print(f"written: {out}")
    return 0


def cmd_query(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    kb = load_kb(_require_file(args.kb, "knowledge base"))
    embedder = config.make_embedder(mock=args.mock)
    query_vector = embed_text(embedder, args.query)
    evidence = top_k(
        kb, query_vector, k=config.retrieval.k, fingerprint=provider_fingerprint(embedder)
    )
    lines = [
        f"{hit.rank}\t{hit.ordinal}\t{hit.score:.6f}\t"
        f"{kb.chunk_by_ordinal(hit.ordinal).stripped_text}"
        for hit in evidence
    ]
    if args.output:
        out = _out_path(args.output)
        out.write_text("rank\tordinal\tscore\ttext\n" + "\n".join(lines) + "\n", encoding="utf-8")
        print(f"written: {out}")
    else:
        for line in lines:
            print(line)
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    kb = load_kb(_require_file(args.kb, "knowledge base"))
    embedder = config.make_embedder(mock=args.mock)
    generator = config.make_generator(mock=args.mock)
    result = analyze_kb(
        kb,
        args.query or DEFAULT_QUERY,
        embedder=embedder,
        generator=generator,
        k=config.retrieval.k,
        profile=config.agent_profile(),
        params=config.generation_params(),
    )
    out = _out_path(args.output)
    out.write_text(result.report.body, encoding="utf-8")
    manifest_path = _out_path(args.manifest or f"{out}.manifest.json")
    manifest_path.write_text(manifest_json(result.manifest), encoding="utf-8")
    if args.bundle_out:
        write_context_bundle(result.bundle, _out_path(args.bundle_out))
        print(f"bundle: {args.bundle_out}")
    if result.report.truncated:
        print("warning: generation stopped at the token limit", file=sys.stderr)
    print(f"report: {out}")
    print(f"manifest: {manifest_path}")
    return 0


def cmd_evidence(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    kb = load_kb(_require_file(args.kb, "knowledge base"))
    embedder = config.make_embedder(mock=args.mock)
    query_vector = embed_text(embedder, args.criteria)
    records = export_evidence_projection(kb, query_vector)
    out = _out_path(args.output)
    write_projection_tsv(records, out)
    print(f"projection: {out}")
    evidence = top_k(
        kb, query_vector, k=config.retrieval.k, fingerprint=provider_fingerprint(embedder)
    )
    for hit in evidence:
        text = kb.chunk_by_ordinal(hit.ordinal).stripped_text
        print(f"[{hit.rank}] ordinal {hit.ordinal} score {hit.score:.6f}: {text}")
    if not args.no_figure:
        figure_path = _out_path(args.figure or out.with_suffix(".png"))
        render_projection_figure(
            records, figure_path, title=f"Evidence for: {args.criteria}"
        )
        print(f"figure: {figure_path}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    ledgers = load_fact_ledgers(_require_file(args.ledger, "fact ledger"))
    prompts = load_prompt_results(_require_file(args.prompts, "prompt results"))
    records = load_topk_records(_require_file(args.topk, "retrieval results"))
    per_scenario = {ledger.scenario: accuracy(ledger) for ledger in ledgers}
    report = overall_performance(
        accuracy_rate=mean_accuracy(ledgers),
        relevance_rate=relevance(prompts),
        em_rate=exact_match(prompts),
        topk_rate=topk_rate(records),
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rates = {
        "accuracy": report.accuracy_rate,
        "relevance": report.relevance_rate,
        "exact match": report.em_rate,
        "top-k evidence": report.topk_rate,
        "overall": report.overall,
    }
    text_lines = [f"{name}: {value * 100:.2f}%" for name, value in rates.items()]
    (out_dir / "metrics.txt").write_text("\n".join(text_lines) + "\n", encoding="utf-8")
    (out_dir / "metrics.json").write_text(
        metric_report_json(report, per_scenario), encoding="utf-8"
    )
    render_rates_figure(rates, out_dir / "rates.png")
    render_accuracy_figure(per_scenario, out_dir / "accuracy.png")
    for line in text_lines:
        print(line)
    print(f"written: {out_dir}/metrics.txt, metrics.json, rates.png, accuracy.png")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(
        prog="timeliner",
        description="Reconstruct and score incident timelines from event exports.",
    )
    parser.add_argument("--version", action="version", version=f"timeliner {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")

    ingest = subparsers.add_parser(
        "ingest", parents=[], help="render a CSV event export to a flat document"
    )
    ingest.add_argument("csv", help="CSV export, one row per event")
    ingest.add_argument("-o", "--output", required=True, help="document file to write")
    ingest.add_argument("--no-header", action="store_true", help="export has no header row")
    ingest.add_argument("--label", help="scenario label stored with the document")
    _common_flags(ingest)
    ingest.set_defaults(func=cmd_ingest)

    build = subparsers.add_parser("build-kb", help="chunk and embed a document into a store")
    build.add_argument("document", help="rendered incident document")
    build.add_argument("-o", "--output", required=True, help="store file to write")
    build.add_argument("--label", help="scenario label stored in the file")
    build.add_argument("--chunks-out", help="also write the chunk table to this TSV")
    _common_flags(build)
    build.set_defaults(func=cmd_build_kb)

    query = subparsers.add_parser("query", help="rank stored evidence against a question")
    query.add_argument("kb", help="store file")
    query.add_argument("query", help="question to score the store against")
    query.add_argument("-o", "--output", help="write the ranking to this TSV")
    _common_flags(query)
    query.set_defaults(func=cmd_query)

    analyze = subparsers.add_parser("analyze", help="generate a timeline report from a store")
    analyze.add_argument("kb", help="store file")
    analyze.add_argument("--query", help="analysis question (defaults to the standard one)")
    analyze.add_argument("-o", "--output", required=True, help="report file to write")
    analyze.add_argument("--manifest", help="manifest path (default: report path + .manifest.json)")
    analyze.add_argument("--bundle-out", help="also write the context bundle to this TSV")
    _common_flags(analyze)
    analyze.set_defaults(func=cmd_analyze)

    evidence = subparsers.add_parser(
        "evidence", help="export the projection table and figure for a criteria prompt"
    )
    evidence.add_argument("kb", help="store file")
    evidence.add_argument("criteria", help="criteria prompt to project against")
    evidence.add_argument("-o", "--output", required=True, help="projection TSV to write")
    evidence.add_argument("--figure", help="figure path (default: output with .png)")
    evidence.add_argument("--no-figure", action="store_true", help="skip the figure")
    _common_flags(evidence)
    evidence.set_defaults(func=cmd_evidence)

    evaluate = subparsers.add_parser("eval", help="score run results into rates and charts")
    evaluate.add_argument("--ledger", required=True, help="fact ledger TSV")
    evaluate.add_argument("--prompts", required=True, help="graded prompt results TSV")
    evaluate.add_argument("--topk", required=True, help="retrieval check results TSV")
    evaluate.add_argument("--out-dir", required=True, help="directory for tables and figures")
    _common_flags(evaluate)
    evaluate.set_defaults(func=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_help(sys.stderr)
            return 1
        if getattr(args, "verbose", False):
            logging.basicConfig(level=logging.INFO, stream=sys.stderr)
        return args.func(args)
    except TimelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
