"""HTTP facade over the engine for the web UI and for scripting.

One session per server process: templates, tree, corpora and the knowledge
store live in a single SessionState. Endpoints are thin adapters: every
response body is produced by the serializers in `export`, byte-identical to a
direct library call. Training runs as a polled job; single-sequence detection
is synchronous. Errors use one body shape: {"code", "message", "detail"}.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Any

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import Response
from pydantic import BaseModel

from . import export
from .corpus import (
    Label,
    LogSequence,
    SequenceCorpus,
    Split,
    TemplateCatalog,
    parse_sequences,
    parse_templates,
    validate_corpus,
)
from .detector import DetectorConfig, LlmMode, detect_sequence
from .decompose import Level, decompose
from .errors import (
    CorruptStore,
    DuplicateTemplateId,
    EmptyFile,
    EmptySequence,
    ExtractionInvalid,
    LabeledTrainAnomaly,
    LlmCallBudgetExceeded,
    LlmUnavailable,
    LogTriadError,
    MalformedRecord,
    TreeNotReady,
    UnboundTemplate,
    UnknownKey,
    UnknownNode,
    UnknownTemplateId,
    VerdictUnparseable,
)
from .hierarchy import SemanticTree, build_tree, extract_all, tree_stats
from .knowledge import KnowledgeStore, ScopeKey, ingest_training, node_summary
from .llm import FixtureLlm, LiveLlm, always_anomaly_llm, always_normal_llm

_STATUS_BY_ERROR: dict[type, int] = {
    MalformedRecord: 400,
    DuplicateTemplateId: 400,
    EmptyFile: 400,
    UnknownTemplateId: 400,
    LabeledTrainAnomaly: 400,
    EmptySequence: 400,
    UnknownKey: 404,
    UnknownNode: 404,
    UnboundTemplate: 400,
    TreeNotReady: 409,
    LlmCallBudgetExceeded: 422,
    VerdictUnparseable: 422,
    ExtractionInvalid: 422,
    LlmUnavailable: 503,
    CorruptStore: 500,
}


class ApiError(Exception):
    """Service-level failure that is not a library domain error."""

    def __init__(self, status: int, code: str, message: str, detail: dict | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail or {}


@dataclass
class TrainJob:
    job_id: str
    state: str = "running"  # running | done | error
    done: int = 0
    total: int = 0
    report: dict | None = None
    error: dict | None = None


@dataclass
class SessionState:
    """Everything one server process holds for one analysis session."""

    catalog: TemplateCatalog | None = None
    tree: SemanticTree | None = None
    store: KnowledgeStore = field(default_factory=KnowledgeStore)
    config: DetectorConfig = field(default_factory=DetectorConfig)
    corpora: dict[str, SequenceCorpus] = field(default_factory=dict)
    sequence_index: dict[str, LogSequence] = field(default_factory=dict)
    reports: dict[str, dict] = field(default_factory=dict)
    extraction_fixture: dict[str, tuple[str, str, str]] | None = None
    verdict_fixture: dict[str, tuple[str, str]] | None = None
    allow_live_llm: bool = True
    audit: bool = False
    train_job: TrainJob | None = None
    _job_counter: Any = field(default_factory=lambda: itertools.count(1))
    _job_lock: threading.Lock = field(default_factory=threading.Lock)

    def require_catalog(self) -> TemplateCatalog:
        if self.catalog is None:
            raise ApiError(409, "CatalogNotLoaded", "no templates loaded yet")
        return self.catalog

    def require_tree(self) -> SemanticTree:
        if self.tree is None:
            raise TreeNotReady()
        return self.tree

    def make_llm(self, mode: LlmMode):
        if mode is LlmMode.FLAG_UNKNOWN:
            return None
        if mode is LlmMode.ALWAYS_ANOMALY:
            return always_anomaly_llm()
        if mode is LlmMode.ALWAYS_NORMAL:
            return always_normal_llm()
        if mode is LlmMode.FIXTURE:
            return FixtureLlm(
                extraction=self.extraction_fixture or {}, verdicts=self.verdict_fixture or {}
            )
        if not self.allow_live_llm:
            raise LlmUnavailable("live LLM access disabled for this server")
        live = LiveLlm.from_env(audit=self.audit)
        if live is None:
            raise LlmUnavailable("live mode needs LOGTRIAD_LLM_BASE_URL and LOGTRIAD_LLM_MODEL")
        return live


class TemplatesPayload(BaseModel):
    csv_text: str | None = None
    templates: list[dict[str, str]] | None = None


class SequencesPayload(BaseModel):
    name: str
    split: str
    csv_text: str | None = None
    records: list[dict] | None = None


class ExtractPayload(BaseModel):
    mode: str | None = None  # "fixture" | "live"; default fixture-first


class TrainPayload(BaseModel):
    corpus: str


class DetectPayload(BaseModel):
    mode: str | None = None
    k: int | None = None
    budget: int | None = None


class OverridePayload(BaseModel):
    label: str
    note: str = ""


def _json(doc, status_code: int = 200) -> Response:
    return Response(content=export.dumps(doc), status_code=status_code, media_type="application/json")


def _records_to_templates_csv(records: list[dict[str, str]]) -> str:
    import csv as _csv
    import io as _io

    out = _io.StringIO()
    writer = _csv.writer(out, lineterminator="\n")
    writer.writerow(["template_id", "template_text"])
    for record in records:
        writer.writerow([record.get("template_id", ""), record.get("template_text", "")])
    return out.getvalue()


def _records_to_sequences_csv(records: list[dict]) -> str:
    import csv as _csv
    import io as _io

    out = _io.StringIO()
    writer = _csv.writer(out, lineterminator="\n")
    writer.writerow(["sequence_id", "events", "label"])
    for record in records:
        events = record.get("events", [])
        if isinstance(events, list):
            events = " ".join(events)
        writer.writerow([record.get("sequence_id", ""), events, record.get("label", "") or ""])
    return out.getvalue()


def create_app(state: SessionState | None = None, cors_origins: tuple[str, ...] = ("*",)) -> FastAPI:
    state = state or SessionState()
    app = FastAPI(title="logtriad", docs_url=None, redoc_url=None)
    app.state.session = state
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(LogTriadError)
    async def _domain_error(request: Request, exc: LogTriadError):
        status = _STATUS_BY_ERROR.get(type(exc), 400)
        return Response(
            content=export.dumps({"code": exc.code, "message": str(exc), "detail": exc.detail()}),
            status_code=status,
            media_type="application/json",
        )

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return Response(
            content=export.dumps({"code": exc.code, "message": exc.message, "detail": exc.detail}),
            status_code=exc.status,
            media_type="application/json",
        )

    @app.get("/health")
    def health():
        return _json({"status": "ok"})

    @app.post("/templates")
    def post_templates(payload: TemplatesPayload):
        if payload.csv_text is not None:
            csv_text = payload.csv_text
        elif payload.templates is not None:
            csv_text = _records_to_templates_csv(payload.templates)
        else:
            raise ApiError(400, "MissingPayload", "provide csv_text or templates")
        catalog = parse_templates(csv_text, source="<request>")
        # a new catalog starts a fresh session: downstream state is stale
        state.catalog = catalog
        state.tree = None
        state.corpora.clear()
        state.sequence_index.clear()
        state.reports.clear()
        return _json({"templates": len(catalog)})

    @app.post("/sequences")
    def post_sequences(payload: SequencesPayload):
        catalog = state.require_catalog()
        try:
            split = Split(payload.split.capitalize())
        except ValueError:
            raise ApiError(400, "BadSplit", f"split must be Train or Test, got {payload.split!r}")
        if payload.csv_text is not None:
            csv_text = payload.csv_text
        elif payload.records is not None:
            csv_text = _records_to_sequences_csv(payload.records)
        else:
            raise ApiError(400, "MissingPayload", "provide csv_text or records")
        corpus = parse_sequences(csv_text, catalog, split, source="<request>")
        state.corpora[payload.name] = corpus
        for seq in corpus.sequences:
            state.sequence_index[seq.sequence_id] = seq
        doc = export.validation_doc(validate_corpus(corpus, catalog))
        doc["name"] = payload.name
        doc["split"] = split.value
        return _json(doc)

    @app.get("/templates")
    def get_templates():
        catalog = state.require_catalog()
        return _json({"templates": dict(catalog.templates)})

    @app.get("/corpora")
    def get_corpora():
        return _json(
            {
                name: {"split": corpus.split.value, "sequences": len(corpus)}
                for name, corpus in state.corpora.items()
            }
        )

    @app.get("/sequences")
    def list_sequences(corpus: str):
        if corpus not in state.corpora:
            raise ApiError(404, "UnknownCorpus", f"no corpus named {corpus!r}")
        return _json(
            {
                "corpus": corpus,
                "sequences": [
                    {
                        "sequence_id": seq.sequence_id,
                        "length": len(seq.events),
                        "label": seq.label.value if seq.label else None,
                    }
                    for seq in state.corpora[corpus].sequences
                ],
            }
        )

    def _hierarchy_doc() -> dict:
        tree = state.require_tree()
        doc = export.tree_doc(tree)
        doc["stats"] = export.tree_stats_doc(tree_stats(tree))
        return doc

    @app.post("/hierarchy/extract")
    def post_extract(payload: ExtractPayload | None = None):
        catalog = state.require_catalog()
        mode = (payload.mode if payload else None) or "fixture-first"
        fixture = state.extraction_fixture if mode != "live" else None
        llm = None
        if mode == "live" or (mode == "fixture-first" and fixture is None):
            llm = state.make_llm(LlmMode.LIVE)
        triples = extract_all(catalog, llm=llm, fixture=fixture)
        state.tree = build_tree(catalog, triples)
        return _json(_hierarchy_doc())

    @app.get("/hierarchy")
    def get_hierarchy():
        return _json(_hierarchy_doc())

    @app.post("/train", status_code=202)
    def post_train(payload: TrainPayload):
        tree = state.require_tree()
        corpus = state.corpora.get(payload.corpus)
        if corpus is None:
            raise ApiError(404, "UnknownCorpus", f"no corpus named {payload.corpus!r}")
        for seq in corpus.sequences:
            if seq.label is Label.ANOMALY:
                raise LabeledTrainAnomaly(seq.sequence_id)
        with state._job_lock:
            if state.train_job is not None and state.train_job.state == "running":
                raise ApiError(409, "JobRunning", "a training job is already running")
            job = TrainJob(job_id=f"train-{next(state._job_counter)}", total=len(corpus))
            state.train_job = job

        def _run():
            try:
                report = ingest_training(
                    corpus, tree, state.store, progress=lambda done, total: setattr(job, "done", done)
                )
                job.report = export.ingest_report_doc(report)
                job.done = job.total
                job.state = "done"
            except LogTriadError as exc:
                job.error = {"code": exc.code, "message": str(exc), "detail": exc.detail()}
                job.state = "error"

        threading.Thread(target=_run, daemon=True).start()
        return _json({"job_id": job.job_id, "total": job.total}, status_code=202)

    @app.get("/train/status")
    def train_status():
        job = state.train_job
        if job is None:
            return _json({"state": "idle"})
        return _json(
            {
                "state": job.state,
                "job_id": job.job_id,
                "done": job.done,
                "total": job.total,
                "report": job.report,
                "error": job.error,
            }
        )

    def _require_sequence(sequence_id: str) -> LogSequence:
        seq = state.sequence_index.get(sequence_id)
        if seq is None:
            raise ApiError(404, "UnknownSequence", f"no sequence {sequence_id!r} loaded")
        return seq

    @app.get("/sequences/{sequence_id}/decomposition")
    def get_decomposition(sequence_id: str):
        tree = state.require_tree()
        seq = _require_sequence(sequence_id)
        decomposition = decompose(seq, tree)
        return _json(export.decomposition_doc(seq.sequence_id, seq.events, decomposition))

    @app.post("/detect/{sequence_id}")
    def post_detect(sequence_id: str, payload: DetectPayload | None = None):
        tree = state.require_tree()
        seq = _require_sequence(sequence_id)
        payload = payload or DetectPayload()
        try:
            mode = LlmMode(payload.mode) if payload.mode else state.config.llm_mode
        except ValueError:
            raise ApiError(400, "BadMode", f"unknown mode {payload.mode!r}")
        config = DetectorConfig(
            k=payload.k if payload.k is not None else state.config.k,
            llm_mode=mode,
            max_llm_calls_per_sequence=(
                payload.budget
                if payload.budget is not None
                else state.config.max_llm_calls_per_sequence
            ),
        )
        llm = state.make_llm(mode)
        report = detect_sequence(seq, tree, state.store, llm, config)
        doc = export.report_doc(report)
        state.reports[sequence_id] = doc
        return _json(doc)

    @app.get("/detect/{sequence_id}/report")
    def get_report(sequence_id: str):
        doc = state.reports.get(sequence_id)
        if doc is None:
            raise ApiError(404, "NoReport", f"no detection report for {sequence_id!r}")
        return _json(doc)

    @app.get("/kb/nodes/{node_id:path}/summary")
    def kb_node_summary(node_id: str):
        tree = state.require_tree()
        return _json(export.node_summary_doc(node_summary(state.store, tree, node_id)))

    @app.get("/kb/entries")
    def kb_entries(parent: str, level: str):
        try:
            level_value = Level(level)
        except ValueError:
            raise ApiError(400, "BadLevel", f"level must be one of S, A, E, got {level!r}")
        parent_path = tuple(parent.split("/")) if parent else ()
        entries = state.store.entries_for_scope(parent_path, level_value)
        return _json({"entries": [export.entry_doc(e) for e in entries]})

    @app.post("/kb/entries/{key:path}/override")
    def kb_override(key: str, payload: OverridePayload):
        try:
            label = Label(payload.label)
        except ValueError:
            raise ApiError(400, "BadLabel", f"label must be Normal or Anomaly, got {payload.label!r}")
        entry = state.store.override(ScopeKey.parse(key), label, payload.note)
        return _json(export.entry_doc(entry))

    return app
