"""Template and sequence ingestion for the analysis session.

File formats (UTF-8 CSV, double quotes for embedded commas):

* templates file      header ``template_id,template_text``
* sequences file      header ``sequence_id,events,label`` where ``events`` is a
  space-separated list of template ids and ``label`` is ``Normal``, ``Anomaly``
  or empty (unlabeled)

Catalogs and corpora are immutable once loaded; loaders validate everything up
front so downstream stages never see a dangling template id. Raw-message
parsing is out of scope: the engine consumes pre-parsed template sequences,
with `match_raw_lines` as an exact-text fallback for toy demos only.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import (
    DuplicateTemplateId,
    EmptyFile,
    LabeledTrainAnomaly,
    MalformedRecord,
    UnknownTemplateId,
)

TEMPLATES_HEADER = ["template_id", "template_text"]
SEQUENCES_HEADER = ["sequence_id", "events", "label"]


class Label(str, Enum):
    NORMAL = "Normal"
    ANOMALY = "Anomaly"


class Split(str, Enum):
    TRAIN = "Train"
    TEST = "Test"


@dataclass(frozen=True)
class TemplateCatalog:
    """Immutable id -> template text mapping for one analysis session."""

    templates: dict[str, str]

    def __len__(self) -> int:
        return len(self.templates)

    def __contains__(self, template_id: str) -> bool:
        return template_id in self.templates

    def text_of(self, template_id: str) -> str:
        return self.templates[template_id]

    def items(self):
        return self.templates.items()


@dataclass(frozen=True)
class LogSequence:
    """One grouped execution trace (e.g. all events of an HDFS block)."""

    sequence_id: str
    events: tuple[str, ...]
    label: Label | None = None


@dataclass(frozen=True)
class SequenceCorpus:
    sequences: tuple[LogSequence, ...]
    split: Split

    def __len__(self) -> int:
        return len(self.sequences)


@dataclass(frozen=True)
class ValidationReport:
    sequences: int
    events: int
    distinct_templates: int
    label_histogram: dict[str, int] = field(default_factory=dict)


def _read_csv_rows(text: str) -> list[tuple[int, list[str]]]:
    """Parse CSV text into (line_number, row) pairs, skipping blank lines."""
    rows = []
    reader = csv.reader(io.StringIO(text))
    for row in reader:
        if not row or all(cell.strip() == "" for cell in row):
            continue
        rows.append((reader.line_num, row))
    return rows


def parse_templates(text: str, source: str = "<memory>") -> TemplateCatalog:
    rows = _read_csv_rows(text)
    if not rows:
        raise EmptyFile(source)
    header_line, header = rows[0]
    if [h.strip() for h in header] != TEMPLATES_HEADER:
        raise MalformedRecord(header_line, f"expected header {','.join(TEMPLATES_HEADER)}")
    if len(rows) == 1:
        raise EmptyFile(source)
    templates: dict[str, str] = {}
    for line_num, row in rows[1:]:
        if len(row) != 2:
            raise MalformedRecord(line_num, f"expected 2 fields, got {len(row)}")
        template_id, text_value = row[0].strip(), row[1]
        if not template_id:
            raise MalformedRecord(line_num, "empty template_id")
        if not text_value.strip():
            raise MalformedRecord(line_num, "empty template_text")
        if template_id in templates:
            raise DuplicateTemplateId(template_id)
        templates[template_id] = text_value
    return TemplateCatalog(templates=templates)


def load_templates(path: str | Path) -> TemplateCatalog:
    path = Path(path)
    return parse_templates(path.read_text(encoding="utf-8"), source=str(path))


def serialize_templates(catalog: TemplateCatalog) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TEMPLATES_HEADER)
    for template_id, text in catalog.items():
        writer.writerow([template_id, text])
    return out.getvalue()


def save_templates(catalog: TemplateCatalog, path: str | Path) -> None:
    Path(path).write_text(serialize_templates(catalog), encoding="utf-8")


def parse_sequences(
    text: str,
    catalog: TemplateCatalog,
    split: Split,
    source: str = "<memory>",
) -> SequenceCorpus:
    rows = _read_csv_rows(text)
    if not rows:
        # header-only and fully empty files both mean "no sequences"
        return SequenceCorpus(sequences=(), split=split)
    header_line, header = rows[0]
    if [h.strip() for h in header] != SEQUENCES_HEADER:
        raise MalformedRecord(header_line, f"expected header {','.join(SEQUENCES_HEADER)}")
    sequences: list[LogSequence] = []
    seen_ids: set[str] = set()
    for line_num, row in rows[1:]:
        if len(row) != 3:
            raise MalformedRecord(line_num, f"expected 3 fields, got {len(row)}")
        sequence_id, events_field, label_field = row[0].strip(), row[1], row[2].strip()
        if not sequence_id:
            raise MalformedRecord(line_num, "empty sequence_id")
        if sequence_id in seen_ids:
            raise MalformedRecord(line_num, f"duplicate sequence_id {sequence_id!r}")
        seen_ids.add(sequence_id)
        events = tuple(events_field.split())
        if not events:
            raise MalformedRecord(line_num, "empty events list")
        for template_id in events:
            if template_id not in catalog:
                raise UnknownTemplateId(sequence_id, template_id)
        if label_field == "":
            label = None
        elif label_field in (Label.NORMAL.value, Label.ANOMALY.value):
            label = Label(label_field)
        else:
            raise MalformedRecord(line_num, f"bad label {label_field!r}")
        if split is Split.TRAIN:
            if label is Label.ANOMALY:
                raise LabeledTrainAnomaly(sequence_id)
            label = Label.NORMAL  # training data is normal by construction
        sequences.append(LogSequence(sequence_id=sequence_id, events=events, label=label))
    return SequenceCorpus(sequences=tuple(sequences), split=split)


def load_sequences(path: str | Path, catalog: TemplateCatalog, split: Split) -> SequenceCorpus:
    path = Path(path)
    return parse_sequences(path.read_text(encoding="utf-8"), catalog, split, source=str(path))


def serialize_sequences(corpus: SequenceCorpus) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SEQUENCES_HEADER)
    for seq in corpus.sequences:
        writer.writerow([seq.sequence_id, " ".join(seq.events), seq.label.value if seq.label else ""])
    return out.getvalue()


def save_sequences(corpus: SequenceCorpus, path: str | Path) -> None:
    Path(path).write_text(serialize_sequences(corpus), encoding="utf-8")


def validate_corpus(corpus: SequenceCorpus, catalog: TemplateCatalog) -> ValidationReport:
    """Purely informational counts; never mutates, never fails on loaded corpora."""
    distinct: set[str] = set()
    events = 0
    histogram = {"Normal": 0, "Anomaly": 0, "Unlabeled": 0}
    for seq in corpus.sequences:
        events += len(seq.events)
        distinct.update(seq.events)
        if seq.label is None:
            histogram["Unlabeled"] += 1
        else:
            histogram[seq.label.value] += 1
    return ValidationReport(
        sequences=len(corpus.sequences),
        events=events,
        distinct_templates=len(distinct),
        label_histogram=histogram,
    )


def match_raw_lines(lines: list[str], catalog: TemplateCatalog) -> list[str]:
    """Fallback parser for toy demos: map raw lines to templates by exact text."""
    by_text = {text: tid for tid, text in catalog.items()}
    out = []
    for i, line in enumerate(lines, start=1):
        tid = by_text.get(line.strip())
        if tid is None:
            raise MalformedRecord(i, f"no template with exact text {line.strip()!r}")
        out.append(tid)
    return out


# --- public HDFS benchmark layout conversion -------------------------------

_EVENT_ID = re.compile(r"E\d+")
_TRACE_EVENT_COLUMNS = ("Features", "EventSequence", "Events")


@dataclass(frozen=True)
class ConversionReport:
    templates: int
    sequences: int
    train_sequences: int
    test_sequences: int


def convert_hdfs_layout(
    traces_path: str | Path,
    labels_path: str | Path,
    templates_in_path: str | Path,
    out_templates: str | Path,
    out_sequences: str | Path,
    out_train: str | Path | None = None,
    out_test: str | Path | None = None,
    train_normals: int = 0,
) -> ConversionReport:
    """Convert the public HDFS benchmark layout into the engine's two files.

    Inputs: a per-block trace CSV (``BlockId`` plus one of Features /
    EventSequence / Events, cell content like ``[E5,E22,E5]`` or ``E5 E22``),
    the ``anomaly_label.csv`` file (``BlockId,Label``), and the parsed template
    list (``EventId,EventTemplate``). Blocks missing from the label file stay
    unlabeled. With ``train_normals`` > 0 the first N normal blocks (file
    order) are also written unlabeled-as-Normal to ``out_train`` and everything
    else to ``out_test``.
    """
    templates_text = Path(templates_in_path).read_text(encoding="utf-8")
    rows = _read_csv_rows(templates_text)
    if not rows:
        raise EmptyFile(str(templates_in_path))
    header = [h.strip() for h in rows[0][1]]
    if header[:2] != ["EventId", "EventTemplate"]:
        raise MalformedRecord(rows[0][0], "expected header EventId,EventTemplate")
    template_rows = []
    for line_num, row in rows[1:]:
        if len(row) < 2 or not row[0].strip():
            raise MalformedRecord(line_num, "expected EventId,EventTemplate")
        template_rows.append((row[0].strip(), row[1]))

    labels: dict[str, str] = {}
    label_rows = _read_csv_rows(Path(labels_path).read_text(encoding="utf-8"))
    if label_rows:
        lheader = [h.strip() for h in label_rows[0][1]]
        if lheader[:2] != ["BlockId", "Label"]:
            raise MalformedRecord(label_rows[0][0], "expected header BlockId,Label")
        for line_num, row in label_rows[1:]:
            if len(row) < 2:
                raise MalformedRecord(line_num, "expected BlockId,Label")
            labels[row[0].strip()] = row[1].strip()

    trace_rows = _read_csv_rows(Path(traces_path).read_text(encoding="utf-8"))
    if not trace_rows:
        raise EmptyFile(str(traces_path))
    theader = [h.strip() for h in trace_rows[0][1]]
    if "BlockId" not in theader:
        raise MalformedRecord(trace_rows[0][0], "trace file needs a BlockId column")
    block_col = theader.index("BlockId")
    event_col = None
    for name in _TRACE_EVENT_COLUMNS:
        if name in theader:
            event_col = theader.index(name)
            break
    if event_col is None:
        raise MalformedRecord(
            trace_rows[0][0],
            f"trace file needs one of {', '.join(_TRACE_EVENT_COLUMNS)}",
        )

    known_ids = {tid for tid, _ in template_rows}
    sequences: list[tuple[str, list[str], str]] = []
    for line_num, row in trace_rows[1:]:
        if len(row) <= max(block_col, event_col):
            raise MalformedRecord(line_num, "short trace row")
        block_id = row[block_col].strip()
        events = _EVENT_ID.findall(row[event_col])
        if not events:
            raise MalformedRecord(line_num, f"no event ids found for block {block_id!r}")
        for event in events:
            if event not in known_ids:
                raise UnknownTemplateId(block_id, event)
        label = labels.get(block_id, "")
        if label not in ("", "Normal", "Anomaly"):
            raise MalformedRecord(line_num, f"bad label {label!r} for block {block_id!r}")
        sequences.append((block_id, events, label))

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TEMPLATES_HEADER)
    for tid, text in template_rows:
        writer.writerow([tid, text])
    Path(out_templates).write_text(out.getvalue(), encoding="utf-8")

    def _write_sequences(path: str | Path, rows_: list[tuple[str, list[str], str]]) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SEQUENCES_HEADER)
        for block_id, events, label in rows_:
            w.writerow([block_id, " ".join(events), label])
        Path(path).write_text(buf.getvalue(), encoding="utf-8")

    _write_sequences(out_sequences, sequences)

    train_rows: list[tuple[str, list[str], str]] = []
    test_rows: list[tuple[str, list[str], str]] = []
    if train_normals > 0 and out_train and out_test:
        remaining = train_normals
        for row_ in sequences:
            if remaining > 0 and row_[2] == "Normal":
                train_rows.append(row_)
                remaining -= 1
            else:
                test_rows.append(row_)
        _write_sequences(out_train, train_rows)
        _write_sequences(out_test, test_rows)

    return ConversionReport(
        templates=len(template_rows),
        sequences=len(sequences),
        train_sequences=len(train_rows),
        test_sequences=len(test_rows),
    )
