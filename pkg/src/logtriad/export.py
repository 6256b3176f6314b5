"""Stable JSON documents for the HTTP service, the CLI and the UI.

Each `*_doc` function produces a plain dict; `dumps` renders it with sorted
keys and compact separators so a document serialized here is byte-identical
to the corresponding HTTP response body (the service returns these bytes
verbatim).
"""

from __future__ import annotations

import json

from .corpus import ValidationReport
from .decompose import Decomposition, Segment
from .detector import DetectionReport, Metrics, SeqVerdict
from .hierarchy import SemanticTree, TreeStats
from .knowledge import IngestReport, KnowledgeEntry, NodeSummary


def dumps(doc) -> str:
    return json.dumps(doc, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def tree_doc(tree: SemanticTree) -> dict:
    def _node(node_id: str) -> dict:
        node = tree.nodes[node_id]
        doc = {
            "id": node.node_id,
            "level": node.level,
            "label": node.label,
            "children": [_node(child_id) for child_id in node.children],
        }
        if node.level == "status":
            doc["template_id"] = tree.template_of_leaf[node.node_id]
        return doc

    return {"schema": "tree/1", "root": _node(tree.root.node_id)}


def tree_stats_doc(stats: TreeStats) -> dict:
    return {
        "entity_count": stats.entity_count,
        "action_count": stats.action_count,
        "status_count": stats.status_count,
        "template_count": stats.template_count,
        "branching": {
            level: {"max": b.max, "mean": b.mean} for level, b in stats.branching.items()
        },
    }


def segment_doc(segment: Segment) -> dict:
    return {
        "level": segment.level.value,
        "parent_id": segment.parent_id,
        "parent_path": list(segment.parent_path),
        "node_ids": list(segment.node_ids),
        "node_labels": list(segment.node_labels),
        "span": list(segment.span),
        "rendered": segment.rendered(),
    }


def decomposition_doc(sequence_id: str, events: tuple[str, ...], decomposition: Decomposition) -> dict:
    return {
        "schema": "decomposition/1",
        "sequence_id": sequence_id,
        "events": list(events),
        "status_segments": [segment_doc(s) for s in decomposition.status_segments],
        "action_segments": [segment_doc(s) for s in decomposition.action_segments],
        "entity_segments": [segment_doc(s) for s in decomposition.entity_segments],
    }


def verdict_doc(verdict: SeqVerdict) -> dict:
    return {
        "key": verdict.key.canonical(),
        "level": verdict.key.level.value,
        "rendered": verdict.key.rendered(),
        "label": verdict.label.value,
        "method": verdict.method.value,
        "explanation": verdict.explanation,
        "llm_called": verdict.llm_called,
    }


def report_doc(report: DetectionReport) -> dict:
    doc = {
        "schema": "detection-report/1",
        "sequence_id": report.sequence_id,
        "final_label": report.final_label.value,
        "explanation": report.explanation,
        "trace": [verdict_doc(v) for v in report.trace],
        "llm_call_count": report.llm_call_count,
        "levels_completed": [level.value for level in report.levels_completed],
        "anomalous_segment": None,
    }
    if report.anomalous_segment is not None:
        doc["anomalous_segment"] = {
            "key": report.anomalous_segment.key.canonical(),
            "level": report.anomalous_segment.key.level.value,
            "rendered": report.anomalous_segment.key.rendered(),
            "span": list(report.anomalous_segment.span),
            "template_ids": list(report.anomalous_segment.template_ids),
        }
    return doc


def entry_doc(entry: KnowledgeEntry) -> dict:
    return {
        "key": entry.key.canonical(),
        "level": entry.key.level.value,
        "parent_path": list(entry.key.parent_path),
        "node_labels": list(entry.key.node_labels),
        "rendered": entry.key.rendered(),
        "label": entry.label.value,
        "explanation": entry.explanation,
        "provenance": entry.provenance.value,
        "frequency": entry.frequency,
        "source_sequence_ids": list(entry.source_sequence_ids),
        "override_note": entry.override_note,
    }


def node_summary_doc(summary: NodeSummary) -> dict:
    return {
        "node_path": list(summary.node_path),
        "entries_by_level": dict(summary.entries_by_level),
        "normal_count": summary.normal_count,
        "anomaly_count": summary.anomaly_count,
        "total_frequency": summary.total_frequency,
    }


def ingest_report_doc(report: IngestReport) -> dict:
    return {
        "sequences": report.sequences,
        "new_entries": report.new_entries,
        "total_observations": report.total_observations,
    }


def validation_doc(report: ValidationReport) -> dict:
    return {
        "sequences": report.sequences,
        "events": report.events,
        "distinct_templates": report.distinct_templates,
        "label_histogram": dict(report.label_histogram),
    }


def metrics_doc(metrics: Metrics) -> dict:
    return {
        "schema": "metrics/1",
        "precision": metrics.precision,
        "recall": metrics.recall,
        "f1": metrics.f1,
        "llm_call_fraction": metrics.llm_call_fraction,
        "distinct_seq_ratio": metrics.distinct_seq_ratio,
        "true_positives": metrics.true_positives,
        "false_positives": metrics.false_positives,
        "false_negatives": metrics.false_negatives,
        "true_negatives": metrics.true_negatives,
        "llm_calls": metrics.llm_calls,
        "sequences": metrics.sequences,
        "events": metrics.events,
        "distinct_keys": metrics.distinct_keys,
    }
