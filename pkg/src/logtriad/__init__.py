"""Hierarchical log anomaly detection with knowledge-base reuse.

The engine turns flat template sequences into a three-level execution
hierarchy (entity -> action -> status), detects and localizes anomalies with
an exact-match pattern filter plus selectively invoked LLM verification, and
amortizes LLM cost through a revisable knowledge base.
"""

from .corpus import (
    Label,
    LogSequence,
    SequenceCorpus,
    Split,
    TemplateCatalog,
    load_sequences,
    load_templates,
    validate_corpus,
)
from .decompose import Decomposition, Level, Segment, annotate, decompose, segment_events
from .detector import (
    DetectionReport,
    DetectorConfig,
    LlmMode,
    Metrics,
    SeqVerdict,
    VerdictMethod,
    detect_sequence,
    evaluate,
    llm_verify,
    pattern_match,
    select_examples,
)
from .hierarchy import (
    SemanticTree,
    SemanticTriple,
    TreeStats,
    build_tree,
    extract_all,
    extract_semantics,
    lookup_leaf,
    normalize_token,
    tree_stats,
)
from .knowledge import (
    IngestReport,
    KnowledgeEntry,
    KnowledgeStore,
    NodeSummary,
    Provenance,
    ScopeKey,
    ingest_training,
    node_summary,
)

__version__ = "0.1.0"

__all__ = [
    "Label",
    "LogSequence",
    "SequenceCorpus",
    "Split",
    "TemplateCatalog",
    "load_sequences",
    "load_templates",
    "validate_corpus",
    "Decomposition",
    "Level",
    "Segment",
    "annotate",
    "decompose",
    "segment_events",
    "DetectionReport",
    "DetectorConfig",
    "LlmMode",
    "Metrics",
    "SeqVerdict",
    "VerdictMethod",
    "detect_sequence",
    "evaluate",
    "llm_verify",
    "pattern_match",
    "select_examples",
    "SemanticTree",
    "SemanticTriple",
    "TreeStats",
    "build_tree",
    "extract_all",
    "extract_semantics",
    "lookup_leaf",
    "normalize_token",
    "tree_stats",
    "IngestReport",
    "KnowledgeEntry",
    "KnowledgeStore",
    "NodeSummary",
    "Provenance",
    "ScopeKey",
    "ingest_training",
    "node_summary",
    "__version__",
]
