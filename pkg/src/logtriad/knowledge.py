"""Persistent hierarchical store of per-segment verdicts.

Keys are exact: a segment is looked up by its canonical
``<level>|<parent path>|<node labels>`` string, never fuzzily. Label authority
follows provenance precedence HumanOverride > LlmVerdict > TrainingPattern,
with one carve-out: an LLM verdict that contradicts trusted training knowledge
is rejected (recorded in `conflicts` and logged) instead of flipping it.

The store file is line-delimited JSON with a version header. Records are
replayed last-wins on load, so appending an updated record is always safe;
`persist` writes a compacted snapshot (one line per key plus the conflict
audit trail). Concurrency: many readers, one writer; all mutations funnel
through an internal lock.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .corpus import Label, SequenceCorpus
from .decompose import Decomposition, Level, Segment, decompose
from .errors import CorruptStore, LabeledTrainAnomaly, UnknownKey, UnknownNode
from .hierarchy import SemanticTree

logger = logging.getLogger(__name__)

STORE_SCHEMA = "logtriad-knowledge-store"
STORE_VERSION = 1
SOURCE_ID_SAMPLE_CAP = 5

PATH_SEP = "/"
FIELD_SEP = "|"
LABEL_SEP = ","


class Provenance(str, Enum):
    TRAINING_PATTERN = "TrainingPattern"
    LLM_VERDICT = "LlmVerdict"
    HUMAN_OVERRIDE = "HumanOverride"


@dataclass(frozen=True)
class ScopeKey:
    """Canonical identity of one execution unit within its semantic scope."""

    level: Level
    parent_path: tuple[str, ...]
    node_labels: tuple[str, ...]

    def canonical(self) -> str:
        return FIELD_SEP.join(
            [self.level.value, PATH_SEP.join(self.parent_path), LABEL_SEP.join(self.node_labels)]
        )

    def rendered(self) -> str:
        return f"{self.parent_path[-1]} → {' '.join(self.node_labels)}"

    @classmethod
    def from_segment(cls, segment: Segment) -> "ScopeKey":
        return cls(
            level=segment.level,
            parent_path=segment.parent_path,
            node_labels=segment.node_labels,
        )

    @classmethod
    def parse(cls, text: str) -> "ScopeKey":
        parts = text.split(FIELD_SEP)
        if len(parts) != 3 or parts[0] not in {lv.value for lv in Level}:
            raise UnknownKey(text)
        level, path, labels = parts
        if not path or not labels:
            raise UnknownKey(text)
        return cls(
            level=Level(level),
            parent_path=tuple(path.split(PATH_SEP)),
            node_labels=tuple(labels.split(LABEL_SEP)),
        )


@dataclass
class KnowledgeEntry:
    key: ScopeKey
    label: Label
    explanation: str
    provenance: Provenance
    frequency: int
    created_at: float
    updated_at: float
    source_sequence_ids: list[str] = field(default_factory=list)
    override_note: str | None = None

    def to_record(self) -> dict:
        return {
            "type": "entry",
            "key": self.key.canonical(),
            "label": self.label.value,
            "explanation": self.explanation,
            "provenance": self.provenance.value,
            "frequency": self.frequency,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "source_sequence_ids": list(self.source_sequence_ids),
            "override_note": self.override_note,
        }

    @classmethod
    def from_record(cls, record: dict) -> "KnowledgeEntry":
        return cls(
            key=ScopeKey.parse(record["key"]),
            label=Label(record["label"]),
            explanation=record["explanation"],
            provenance=Provenance(record["provenance"]),
            frequency=int(record["frequency"]),
            created_at=float(record["created_at"]),
            updated_at=float(record["updated_at"]),
            source_sequence_ids=list(record.get("source_sequence_ids", [])),
            override_note=record.get("override_note"),
        )


@dataclass(frozen=True)
class ConflictRecord:
    key: str
    kept_label: Label
    rejected_label: Label
    rejected_provenance: Provenance
    at: float

    def to_record(self) -> dict:
        return {
            "type": "conflict",
            "key": self.key,
            "kept_label": self.kept_label.value,
            "rejected_label": self.rejected_label.value,
            "rejected_provenance": self.rejected_provenance.value,
            "at": self.at,
        }


@dataclass(frozen=True)
class NodeSummary:
    node_path: tuple[str, ...]
    entries_by_level: dict[str, int]
    normal_count: int
    anomaly_count: int
    total_frequency: int


@dataclass(frozen=True)
class IngestReport:
    sequences: int
    new_entries: int
    total_observations: int


class KnowledgeStore:
    """In-memory map of canonical key -> entry, optionally bound to a file.

    When bound (`path` set), human overrides are appended to the file
    immediately; bulk updates rely on an explicit `persist` snapshot.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self.entries: dict[str, KnowledgeEntry] = {}
        self.conflicts: list[ConflictRecord] = []
        self._lock = threading.RLock()

    def __len__(self) -> int:
        return len(self.entries)

    def query(self, key: ScopeKey) -> KnowledgeEntry | None:
        return self.entries.get(key.canonical())

    def upsert(
        self,
        key: ScopeKey,
        label: Label,
        explanation: str,
        provenance: Provenance,
        source_sequence_id: str | None = None,
    ) -> KnowledgeEntry:
        if provenance is Provenance.TRAINING_PATTERN and label is not Label.NORMAL:
            raise ValueError("training patterns are normal by definition")
        with self._lock:
            now = time.time()
            canonical = key.canonical()
            existing = self.entries.get(canonical)
            if existing is None:
                entry = KnowledgeEntry(
                    key=key,
                    label=label,
                    explanation=explanation,
                    provenance=provenance,
                    frequency=1,
                    created_at=now,
                    updated_at=now,
                )
                if source_sequence_id:
                    entry.source_sequence_ids.append(source_sequence_id)
                self.entries[canonical] = entry
                return entry

            existing.frequency += 1
            existing.updated_at = now
            if source_sequence_id and source_sequence_id not in existing.source_sequence_ids:
                if len(existing.source_sequence_ids) < SOURCE_ID_SAMPLE_CAP:
                    existing.source_sequence_ids.append(source_sequence_id)

            if provenance is Provenance.HUMAN_OVERRIDE:
                existing.label = label
                existing.explanation = explanation
                existing.provenance = provenance
            elif existing.provenance is Provenance.HUMAN_OVERRIDE:
                pass  # sticky: frequency already counted above
            elif existing.provenance is Provenance.TRAINING_PATTERN and provenance is Provenance.LLM_VERDICT:
                # agreement keeps the trusted training provenance; a
                # contradiction is rejected, never silently flipped
                if label is not existing.label:
                    conflict = ConflictRecord(
                        key=canonical,
                        kept_label=existing.label,
                        rejected_label=label,
                        rejected_provenance=provenance,
                        at=now,
                    )
                    self.conflicts.append(conflict)
                    logger.warning(
                        "ConflictingVerdict: %s verdict %s rejected, key %s keeps trusted %s",
                        provenance.value,
                        label.value,
                        canonical,
                        existing.label.value,
                    )
            elif provenance is Provenance.LLM_VERDICT and existing.provenance is Provenance.LLM_VERDICT:
                existing.label = label  # newest considered verdict wins
                existing.explanation = explanation
            # remaining combinations are lower-authority input: frequency only
            return existing

    def override(self, key: ScopeKey, new_label: Label, note: str) -> KnowledgeEntry:
        """Human correction: takes label authority and persists at once."""
        with self._lock:
            canonical = key.canonical()
            entry = self.entries.get(canonical)
            if entry is None:
                raise UnknownKey(canonical)
            entry.label = new_label
            entry.provenance = Provenance.HUMAN_OVERRIDE
            entry.override_note = note
            entry.updated_at = time.time()
            if self.path is not None:
                self._append_record(entry.to_record())
            return entry

    def _append_record(self, record: dict) -> None:
        new_file = not self.path.exists() or self.path.stat().st_size == 0
        with self.path.open("a", encoding="utf-8") as fh:
            if new_file:
                fh.write(json.dumps({"schema": STORE_SCHEMA, "version": STORE_VERSION}) + "\n")
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")

    def persist(self, path: str | Path | None = None) -> Path:
        """Write a compacted snapshot: header, entries (key order), conflicts."""
        target = Path(path) if path else self.path
        if target is None:
            raise ValueError("no path bound and none given")
        with self._lock:
            lines = [json.dumps({"schema": STORE_SCHEMA, "version": STORE_VERSION})]
            for canonical in sorted(self.entries):
                lines.append(
                    json.dumps(self.entries[canonical].to_record(), ensure_ascii=False, sort_keys=True)
                )
            for conflict in self.conflicts:
                lines.append(json.dumps(conflict.to_record(), ensure_ascii=False, sort_keys=True))
            target.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return target

    @classmethod
    def load(cls, path: str | Path) -> "KnowledgeStore":
        path = Path(path)
        store = cls(path=path)
        text = path.read_text(encoding="utf-8")
        lines = text.splitlines()
        if not lines:
            return store
        try:
            header = json.loads(lines[0])
            if header.get("schema") != STORE_SCHEMA:
                raise ValueError("wrong schema")
        except (json.JSONDecodeError, ValueError, AttributeError):
            raise CorruptStore(1, "missing or invalid store header") from None
        for line_num, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                raise CorruptStore(line_num, "invalid JSON record") from None
            kind = record.get("type")
            try:
                if kind == "entry":
                    entry = KnowledgeEntry.from_record(record)
                    store.entries[entry.key.canonical()] = entry  # last record wins
                elif kind == "conflict":
                    store.conflicts.append(
                        ConflictRecord(
                            key=record["key"],
                            kept_label=Label(record["kept_label"]),
                            rejected_label=Label(record["rejected_label"]),
                            rejected_provenance=Provenance(record["rejected_provenance"]),
                            at=float(record["at"]),
                        )
                    )
                else:
                    raise KeyError("type")
            except (KeyError, ValueError, UnknownKey):
                raise CorruptStore(line_num, "record missing required fields") from None
        return store

    def entries_for_scope(self, parent_path: tuple[str, ...], level: Level) -> list[KnowledgeEntry]:
        """All entries in one (parent, level) scope, frequency-descending."""
        found = [
            entry
            for entry in self.entries.values()
            if entry.key.level is level and entry.key.parent_path == parent_path
        ]
        found.sort(key=lambda e: (-e.frequency, e.key.canonical()))
        return found


def ingest_training(
    corpus: SequenceCorpus,
    tree: SemanticTree,
    store: KnowledgeStore,
    progress=None,
) -> IngestReport:
    """Record every segment of every training sequence as a normal pattern.

    `progress(done, total)` is invoked after each sequence when given (used
    by the service's polled training job).
    """
    for seq in corpus.sequences:
        if seq.label is Label.ANOMALY:
            raise LabeledTrainAnomaly(seq.sequence_id)
    new_entries = 0
    observations = 0
    for index, seq in enumerate(corpus.sequences, start=1):
        decomposition: Decomposition = decompose(seq, tree)
        for segment in decomposition.all_segments():
            key = ScopeKey.from_segment(segment)
            before = store.query(key)
            store.upsert(
                key,
                Label.NORMAL,
                "",
                Provenance.TRAINING_PATTERN,
                source_sequence_id=seq.sequence_id,
            )
            if before is None:
                new_entries += 1
            observations += 1
        if progress is not None:
            progress(index, len(corpus.sequences))
    return IngestReport(
        sequences=len(corpus.sequences),
        new_entries=new_entries,
        total_observations=observations,
    )


def node_summary(store: KnowledgeStore, tree: SemanticTree, node_id: str) -> NodeSummary:
    """Aggregate entries whose scope path passes through the given node."""
    if node_id not in tree.nodes:
        raise UnknownNode(node_id)
    node_path = tree.label_path(node_id)
    depth = len(node_path)
    entries_by_level = {lv.value: 0 for lv in Level}
    normal = anomaly = total_frequency = 0
    for entry in store.entries.values():
        if entry.key.parent_path[:depth] != node_path:
            continue
        entries_by_level[entry.key.level.value] += 1
        if entry.label is Label.NORMAL:
            normal += 1
        else:
            anomaly += 1
        total_frequency += entry.frequency
    return NodeSummary(
        node_path=node_path,
        entries_by_level=entries_by_level,
        normal_count=normal,
        anomaly_count=anomaly,
        total_frequency=total_frequency,
    )
