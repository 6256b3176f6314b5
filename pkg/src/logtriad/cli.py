"""Batch entry points: dataset conversion, extraction, training, detection,
evaluation, knowledge-base inspection and server launch.

Exit codes: 0 success, 1 domain error (typed error name on stderr), 2 usage
error (argparse). Default output is a human table; ``--format jsonl`` switches
to line-delimited records for scripting.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import export
from .corpus import (
    Split,
    convert_hdfs_layout,
    load_sequences,
    load_templates,
    validate_corpus,
)
from .detector import DetectorConfig, LlmMode, detect_sequence, evaluate
from .errors import LogTriadError
from .hierarchy import build_tree, extract_all, load_extraction_fixture, tree_stats
from .knowledge import KnowledgeStore, ingest_training, node_summary
from .llm import LiveLlm, load_verdict_fixture


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="logtriad",
        description="Hierarchical log anomaly detection with knowledge-base reuse.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    convert = sub.add_parser("convert-hdfs", help="convert the public HDFS benchmark layout")
    convert.add_argument("--traces", required=True, help="per-block trace CSV (BlockId + Features)")
    convert.add_argument("--labels", required=True, help="anomaly_label.csv (BlockId,Label)")
    convert.add_argument("--templates-in", required=True, help="EventId,EventTemplate CSV")
    convert.add_argument("--out-templates", required=True)
    convert.add_argument("--out-sequences", required=True)
    convert.add_argument("--out-train", help="also write first N normal blocks here")
    convert.add_argument("--out-test", help="remaining blocks when --train-normals is used")
    convert.add_argument("--train-normals", type=int, default=0)

    def _common(p: argparse.ArgumentParser, fixture_required: bool = False):
        p.add_argument("--templates", required=True, help="templates CSV")
        p.add_argument(
            "--fixture",
            required=fixture_required,
            help="extraction fixture CSV (template_id,entity,action,status)",
        )
        p.add_argument("--format", choices=["table", "jsonl"], default="table")

    extract = sub.add_parser("extract", help="build the semantic tree")
    _common(extract)
    extract.add_argument("--mode", choices=["fixture", "live"], default="fixture")
    extract.add_argument("--tree-out", help="write the tree document to this path")

    train = sub.add_parser("train", help="ingest normal sequences into the knowledge base")
    _common(train)
    train.add_argument("--train", "--in", dest="train_path", required=True, help="train sequences CSV")
    train.add_argument("--store", help="knowledge store file (created or updated)")

    detect = sub.add_parser("detect", help="detect one sequence")
    _common(detect)
    detect.add_argument("--seq", required=True, help="sequence id to detect")
    detect.add_argument("--test", required=True, help="sequences CSV containing --seq")
    detect.add_argument("--store", help="knowledge store file (loaded; updated in LLM modes)")
    detect.add_argument("--mode", choices=[m.value for m in LlmMode], default="flag-unknown")
    detect.add_argument("--k", type=int, default=5)
    detect.add_argument("--budget", type=int, default=10)
    detect.add_argument("--verdict-fixture", help="JSONL canned verdicts for fixture mode")

    evalp = sub.add_parser("eval", help="evaluate a labeled test corpus")
    _common(evalp)
    evalp.add_argument("--test", required=True, help="labeled test sequences CSV")
    evalp.add_argument("--train", dest="train_path", help="ingest this train CSV first")
    evalp.add_argument("--store", help="knowledge store file (loaded read-write, not persisted)")
    evalp.add_argument("--mode", choices=[m.value for m in LlmMode], default="flag-unknown")
    evalp.add_argument("--k", type=int, default=5)
    evalp.add_argument("--budget", type=int, default=10)
    evalp.add_argument("--jobs", type=int, default=1)
    evalp.add_argument("--verdict-fixture", help="JSONL canned verdicts for fixture mode")
    evalp.add_argument(
        "--dump-decompositions",
        help="also write one decomposition record per test sequence (JSONL) here",
    )

    kb = sub.add_parser("kb-stats", help="inspect a knowledge store")
    kb.add_argument("--store", required=True)
    kb.add_argument("--node", help="summarize one tree node (needs --templates/--fixture)")
    kb.add_argument("--templates")
    kb.add_argument("--fixture")
    kb.add_argument("--format", choices=["table", "jsonl"], default="table")
    kb.add_argument("--top", type=int, default=10, help="top entries by frequency")

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--addr", default="127.0.0.1:8574", help="bind address host:port")
    serve.add_argument("--templates")
    serve.add_argument("--fixture")
    serve.add_argument("--verdict-fixture")
    serve.add_argument("--train", dest="train_path", help="pre-ingest this train CSV")
    serve.add_argument("--test", dest="test_path", help="pre-register this test CSV")
    serve.add_argument("--store", help="bind the knowledge store to this file")
    serve.add_argument("--cors-origin", action="append", default=None)
    serve.add_argument("--no-live-llm", action="store_true")
    serve.add_argument("--audit", action="store_true", help="log LLM request/response bodies")

    return parser


def _load_tree(args):
    catalog = load_templates(args.templates)
    fixture = load_extraction_fixture(args.fixture) if args.fixture else None
    llm = None
    if getattr(args, "mode", None) == "live" or fixture is None:
        llm = LiveLlm.from_env()
    triples = extract_all(catalog, llm=llm, fixture=fixture)
    return catalog, build_tree(catalog, triples)


def _make_llm(mode: LlmMode, args):
    from .llm import FixtureLlm, always_anomaly_llm, always_normal_llm

    if mode is LlmMode.FLAG_UNKNOWN:
        return None
    if mode is LlmMode.ALWAYS_ANOMALY:
        return always_anomaly_llm()
    if mode is LlmMode.ALWAYS_NORMAL:
        return always_normal_llm()
    if mode is LlmMode.FIXTURE:
        verdicts = {}
        if getattr(args, "verdict_fixture", None):
            verdicts = load_verdict_fixture(args.verdict_fixture)
        extraction = load_extraction_fixture(args.fixture) if args.fixture else {}
        return FixtureLlm(extraction=extraction, verdicts=verdicts)
    live = LiveLlm.from_env()
    if live is None:
        from .errors import LlmUnavailable

        raise LlmUnavailable("live mode needs LOGTRIAD_LLM_BASE_URL and LOGTRIAD_LLM_MODEL")
    return live


def _emit(doc: dict, fmt: str, table_lines: list[str]) -> None:
    if fmt == "jsonl":
        print(export.dumps(doc))
    else:
        for line in table_lines:
            print(line)


def _cmd_convert(args) -> int:
    report = convert_hdfs_layout(
        traces_path=args.traces,
        labels_path=args.labels,
        templates_in_path=args.templates_in,
        out_templates=args.out_templates,
        out_sequences=args.out_sequences,
        out_train=args.out_train,
        out_test=args.out_test,
        train_normals=args.train_normals,
    )
    print(
        f"converted {report.templates} templates, {report.sequences} sequences"
        + (
            f" (train {report.train_sequences}, test {report.test_sequences})"
            if args.train_normals
            else ""
        )
    )
    return 0


def _cmd_extract(args) -> int:
    _, tree = _load_tree(args)
    stats = tree_stats(tree)
    doc = export.tree_doc(tree)
    doc["stats"] = export.tree_stats_doc(stats)
    if args.tree_out:
        Path(args.tree_out).write_text(export.dumps(doc), encoding="utf-8")
    _emit(
        doc,
        args.format,
        [
            f"entities   {stats.entity_count}",
            f"actions    {stats.action_count}",
            f"statuses   {stats.status_count}",
            f"templates  {stats.template_count}",
        ],
    )
    return 0


def _cmd_train(args) -> int:
    catalog, tree = _load_tree(args)
    corpus = load_sequences(args.train_path, catalog, Split.TRAIN)
    store = KnowledgeStore.load(args.store) if args.store and Path(args.store).exists() else KnowledgeStore(path=args.store)
    report = ingest_training(corpus, tree, store)
    if args.store:
        store.persist(args.store)
    doc = export.ingest_report_doc(report)
    _emit(
        doc,
        args.format,
        [
            f"sequences     {report.sequences}",
            f"new entries   {report.new_entries}",
            f"observations  {report.total_observations}",
        ],
    )
    return 0


def _cmd_detect(args) -> int:
    catalog, tree = _load_tree(args)
    corpus = load_sequences(args.test, catalog, Split.TEST)
    by_id = {seq.sequence_id: seq for seq in corpus.sequences}
    if args.seq not in by_id:
        print(f"error: UnknownSequence: no sequence {args.seq!r} in {args.test}", file=sys.stderr)
        return 1
    mode = LlmMode(args.mode)
    store = KnowledgeStore.load(args.store) if args.store and Path(args.store).exists() else KnowledgeStore(path=args.store)
    config = DetectorConfig(k=args.k, llm_mode=mode, max_llm_calls_per_sequence=args.budget)
    report = detect_sequence(by_id[args.seq], tree, store, _make_llm(mode, args), config)
    if args.store and mode is not LlmMode.FLAG_UNKNOWN:
        store.persist(args.store)
    doc = export.report_doc(report)
    lines = [
        f"sequence   {report.sequence_id}",
        f"label      {report.final_label.value}",
        f"llm calls  {report.llm_call_count}",
    ]
    if report.anomalous_segment is not None:
        span = report.anomalous_segment.span
        lines.append(f"segment    {report.anomalous_segment.key.rendered()} @ [{span[0]},{span[1]})")
    lines.append(f"explanation  {report.explanation}")
    _emit(doc, args.format, lines)
    return 0


def _format_ratio(value: float | None) -> str:
    return "absent" if value is None else f"{value:.6f}"


def _cmd_eval(args) -> int:
    catalog, tree = _load_tree(args)
    store = KnowledgeStore.load(args.store) if args.store and Path(args.store).exists() else KnowledgeStore()
    if args.train_path:
        train = load_sequences(args.train_path, catalog, Split.TRAIN)
        ingest_training(train, tree, store)
    corpus = load_sequences(args.test, catalog, Split.TEST)
    if args.dump_decompositions:
        from .decompose import decompose

        with Path(args.dump_decompositions).open("w", encoding="utf-8") as fh:
            for seq in corpus.sequences:
                doc = export.decomposition_doc(seq.sequence_id, seq.events, decompose(seq, tree))
                fh.write(export.dumps(doc) + "\n")
    mode = LlmMode(args.mode)
    config = DetectorConfig(k=args.k, llm_mode=mode, max_llm_calls_per_sequence=args.budget)
    result = evaluate(corpus, tree, store, _make_llm(mode, args), config, jobs=args.jobs)
    m = result.metrics
    doc = export.metrics_doc(m)
    _emit(
        doc,
        args.format,
        [
            f"sequences          {m.sequences}",
            f"precision          {_format_ratio(m.precision)}",
            f"recall             {_format_ratio(m.recall)}",
            f"f1                 {_format_ratio(m.f1)}",
            f"llm calls          {m.llm_calls} ({m.llm_call_fraction:.4f} per sequence)",
            f"events             {m.events}",
            f"distinct units     {m.distinct_keys}",
            f"distinct_seq_ratio {_format_ratio(m.distinct_seq_ratio)}",
            f"confusion          tp={m.true_positives} fp={m.false_positives} fn={m.false_negatives} tn={m.true_negatives}",
        ],
    )
    return 0


def _cmd_kb_stats(args) -> int:
    store = KnowledgeStore.load(args.store)
    by_level: dict[str, int] = {"S": 0, "A": 0, "E": 0}
    by_provenance: dict[str, int] = {}
    by_label: dict[str, int] = {}
    for entry in store.entries.values():
        by_level[entry.key.level.value] += 1
        by_provenance[entry.provenance.value] = by_provenance.get(entry.provenance.value, 0) + 1
        by_label[entry.label.value] = by_label.get(entry.label.value, 0) + 1
    top = sorted(store.entries.values(), key=lambda e: (-e.frequency, e.key.canonical()))[: args.top]
    doc = {
        "entries": len(store.entries),
        "by_level": by_level,
        "by_provenance": by_provenance,
        "by_label": by_label,
        "conflicts": len(store.conflicts),
        "top": [export.entry_doc(e) for e in top],
    }
    if args.node:
        if not (args.templates and args.fixture):
            print("error: --node needs --templates and --fixture to build the tree", file=sys.stderr)
            return 1
        _, tree = _load_tree(args)
        doc["node_summary"] = export.node_summary_doc(node_summary(store, tree, args.node))
    lines = [
        f"entries      {doc['entries']}",
        f"by level     {doc['by_level']}",
        f"by prov.     {doc['by_provenance']}",
        f"by label     {doc['by_label']}",
        f"conflicts    {doc['conflicts']}",
    ]
    for entry in top:
        lines.append(f"  {entry.frequency:>6}×  [{entry.key.level.value}] {entry.key.rendered()}")
    if "node_summary" in doc:
        lines.append(f"node summary {doc['node_summary']}")
    _emit(doc, args.format, lines)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import SessionState, create_app

    state = SessionState(allow_live_llm=not args.no_live_llm, audit=args.audit)
    if args.store:
        state.store = (
            KnowledgeStore.load(args.store) if Path(args.store).exists() else KnowledgeStore(path=args.store)
        )
    if args.fixture:
        state.extraction_fixture = load_extraction_fixture(args.fixture)
    if args.verdict_fixture:
        state.verdict_fixture = load_verdict_fixture(args.verdict_fixture)
    if args.templates:
        state.catalog = load_templates(args.templates)
        if state.extraction_fixture:
            triples = extract_all(state.catalog, fixture=state.extraction_fixture)
            state.tree = build_tree(state.catalog, triples)
    if args.train_path and state.catalog:
        corpus = load_sequences(args.train_path, state.catalog, Split.TRAIN)
        state.corpora["train"] = corpus
        for seq in corpus.sequences:
            state.sequence_index[seq.sequence_id] = seq
        if state.tree:
            ingest_training(corpus, state.tree, state.store)
    if args.test_path and state.catalog:
        corpus = load_sequences(args.test_path, state.catalog, Split.TEST)
        state.corpora["test"] = corpus
        for seq in corpus.sequences:
            state.sequence_index[seq.sequence_id] = seq
    host, _, port = args.addr.rpartition(":")
    app = create_app(state, cors_origins=tuple(args.cors_origin or ["*"]))
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return 0


_COMMANDS = {
    "convert-hdfs": _cmd_convert,
    "extract": _cmd_extract,
    "train": _cmd_train,
    "detect": _cmd_detect,
    "eval": _cmd_eval,
    "kb-stats": _cmd_kb_stats,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except LogTriadError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: IoError: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
