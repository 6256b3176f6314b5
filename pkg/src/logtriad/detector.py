"""Per-segment detection and bottom-up per-sequence orchestration.

Each segment is first checked against the knowledge base by exact key
(pattern matching); only unknown segments go to the LLM, with up to k
known-normal units from the same scope as in-context examples. A sequence is
scanned status level first, left to right, then action, then entity (higher
levels compose lower ones and cost more), and scanning stops at the first
anomalous segment, which becomes the localized finding. LLM verdicts are
written back to the store, so a unit is paid for at most once across the
whole stream.

``flag-unknown`` mode is the zero-LLM operating point: unknown segments are
flagged anomalous outright and nothing is stored.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

from .corpus import Label, LogSequence, SequenceCorpus
from .decompose import Decomposition, Level, Segment, decompose, segment_events
from .errors import LlmCallBudgetExceeded, LlmUnavailable, UnlabeledCorpus
from .hierarchy import SemanticTree
from .knowledge import KnowledgeStore, Provenance, ScopeKey
from .llm import VerdictResult, VerifyRequest

LEVEL_ORDER = (Level.STATUS, Level.ACTION, Level.ENTITY)

_LEVEL_SCOPE_NOUN = {
    Level.STATUS: "statuses of action",
    Level.ACTION: "actions on entity",
    Level.ENTITY: "entities of the whole sequence under",
}


class LlmMode(str, Enum):
    LIVE = "live"
    FIXTURE = "fixture"
    ALWAYS_ANOMALY = "always-anomaly"
    ALWAYS_NORMAL = "always-normal"
    FLAG_UNKNOWN = "flag-unknown"


class VerdictMethod(str, Enum):
    PATTERN_MATCH = "PatternMatch"
    KNOWLEDGE_REUSE = "KnowledgeReuse"
    LLM = "Llm"
    HUMAN_OVERRIDE_REUSE = "HumanOverrideReuse"
    FLAG_UNKNOWN = "FlagUnknown"


@dataclass(frozen=True)
class DetectorConfig:
    k: int = 5  # in-context examples per verification
    llm_mode: LlmMode = LlmMode.FLAG_UNKNOWN
    max_llm_calls_per_sequence: int = 10
    example_selection: str = "FrequencyDesc"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.max_llm_calls_per_sequence < 0:
            raise ValueError("LLM call budget must be >= 0")


@dataclass(frozen=True)
class SeqVerdict:
    key: ScopeKey
    label: Label
    method: VerdictMethod
    explanation: str
    llm_called: bool


@dataclass(frozen=True)
class AnomalousSegment:
    key: ScopeKey
    span: tuple[int, int]
    template_ids: tuple[str, ...]


@dataclass(frozen=True)
class DetectionReport:
    sequence_id: str
    final_label: Label
    anomalous_segment: AnomalousSegment | None
    explanation: str
    trace: tuple[SeqVerdict, ...]  # S verdicts, then A, then E
    llm_call_count: int
    levels_completed: tuple[Level, ...]  # levels fully scanned all-normal


def pattern_match(segment: Segment, store: KnowledgeStore) -> SeqVerdict | None:
    """Exact-key lookup; None means the unit is unknown to the store."""
    key = ScopeKey.from_segment(segment)
    entry = store.query(key)
    if entry is None:
        return None
    if entry.provenance is Provenance.HUMAN_OVERRIDE:
        method = VerdictMethod.HUMAN_OVERRIDE_REUSE
    elif entry.provenance is Provenance.TRAINING_PATTERN:
        method = VerdictMethod.PATTERN_MATCH
    else:
        method = VerdictMethod.KNOWLEDGE_REUSE
    explanation = entry.explanation or (
        f"recurring {entry.label.value.lower()} pattern, observed {entry.frequency} time(s)"
    )
    return SeqVerdict(
        key=key, label=entry.label, method=method, explanation=explanation, llm_called=False
    )


def select_examples(
    store: KnowledgeStore, parent_path: tuple[str, ...], level: Level, k: int
) -> list[str]:
    """Up to k known-normal units from the same scope, frequency-descending.

    Ties break on the canonical key so selection is deterministic; fewer than
    k (possibly zero) are returned when the scope is sparse.
    """
    normals = [
        entry
        for entry in store.entries_for_scope(parent_path, level)
        if entry.label is Label.NORMAL
    ]
    return [entry.key.rendered() for entry in normals[:k]]


def _scope_description(segment: Segment) -> str:
    noun = _LEVEL_SCOPE_NOUN[segment.level]
    return f"{noun} '{segment.parent_path[-1]}' (path {' / '.join(segment.parent_path)})"


def llm_verify(
    segment: Segment,
    examples: list[str],
    llm,
    store: KnowledgeStore,
    source_sequence_id: str | None = None,
) -> SeqVerdict:
    """Verify one unknown segment with the LLM and bank the verdict."""
    if llm is None:
        raise LlmUnavailable("no LLM client configured for this mode")
    key = ScopeKey.from_segment(segment)
    request = VerifyRequest(
        key=key.canonical(),
        scope_description=_scope_description(segment),
        rendered_sequence=segment.rendered(),
        examples=tuple(examples),
    )
    result: VerdictResult = llm.verify(request)
    store.upsert(
        key,
        result.label,
        result.explanation,
        Provenance.LLM_VERDICT,
        source_sequence_id=source_sequence_id,
    )
    return SeqVerdict(
        key=key,
        label=result.label,
        method=VerdictMethod.LLM,
        explanation=result.explanation,
        llm_called=True,
    )


def detect_sequence(
    sequence: LogSequence,
    tree: SemanticTree,
    store: KnowledgeStore,
    llm,
    config: DetectorConfig,
) -> DetectionReport:
    decomposition = decompose(sequence, tree)
    return detect_decomposed(sequence, decomposition, store, llm, config)


def detect_decomposed(
    sequence: LogSequence,
    decomposition: Decomposition,
    store: KnowledgeStore,
    llm,
    config: DetectorConfig,
) -> DetectionReport:
    trace: list[SeqVerdict] = []
    levels_completed: list[Level] = []
    llm_calls = 0

    for level in LEVEL_ORDER:
        for segment in decomposition.at_level(level):
            verdict = pattern_match(segment, store)
            if verdict is None:
                if config.llm_mode is LlmMode.FLAG_UNKNOWN:
                    verdict = SeqVerdict(
                        key=ScopeKey.from_segment(segment),
                        label=Label.ANOMALY,
                        method=VerdictMethod.FLAG_UNKNOWN,
                        explanation="unknown execution unit flagged without LLM verification",
                        llm_called=False,
                    )
                else:
                    if llm_calls >= config.max_llm_calls_per_sequence:
                        raise LlmCallBudgetExceeded(config.max_llm_calls_per_sequence)
                    examples = select_examples(store, segment.parent_path, level, config.k)
                    verdict = llm_verify(
                        segment, examples, llm, store, source_sequence_id=sequence.sequence_id
                    )
                    llm_calls += 1
            trace.append(verdict)
            if verdict.label is Label.ANOMALY:
                located = AnomalousSegment(
                    key=verdict.key,
                    span=segment.span,
                    template_ids=tuple(segment_events(segment, sequence)),
                )
                return DetectionReport(
                    sequence_id=sequence.sequence_id,
                    final_label=Label.ANOMALY,
                    anomalous_segment=located,
                    explanation=verdict.explanation,
                    trace=tuple(trace),
                    llm_call_count=llm_calls,
                    levels_completed=tuple(levels_completed),
                )
        levels_completed.append(level)

    return DetectionReport(
        sequence_id=sequence.sequence_id,
        final_label=Label.NORMAL,
        anomalous_segment=None,
        explanation="all execution units matched known-normal behavior at every level",
        trace=tuple(trace),
        llm_call_count=llm_calls,
        levels_completed=tuple(levels_completed),
    )


@dataclass(frozen=True)
class Metrics:
    """Sequence-level evaluation; anomaly is the positive class.

    Undefined ratios (zero denominators) are None, never coerced to 0.
    `distinct_seq_ratio` measures data-space compression: total events in the
    corpus over the number of distinct scope keys its decompositions produce.
    """

    precision: float | None
    recall: float | None
    f1: float | None
    llm_call_fraction: float
    distinct_seq_ratio: float | None
    true_positives: int
    false_positives: int
    false_negatives: int
    true_negatives: int
    llm_calls: int
    sequences: int
    events: int
    distinct_keys: int


@dataclass
class EvaluationResult:
    metrics: Metrics
    reports: list[DetectionReport] = field(default_factory=list)


def evaluate(
    corpus: SequenceCorpus,
    tree: SemanticTree,
    store: KnowledgeStore,
    llm,
    config: DetectorConfig,
    jobs: int = 1,
    keep_reports: bool = False,
) -> EvaluationResult:
    """Detect every labeled sequence and score the predictions.

    With jobs > 1 sequences are detected concurrently (the store serializes
    writers); exact LLM-call counts are only reproducible at jobs=1 because
    banking order then matches stream order.
    """
    for seq in corpus.sequences:
        if seq.label is None:
            raise UnlabeledCorpus(seq.sequence_id)

    distinct_keys: set[str] = set()
    total_events = 0
    decompositions: list[Decomposition] = []
    for seq in corpus.sequences:
        decomposition = decompose(seq, tree)
        decompositions.append(decomposition)
        total_events += len(seq.events)
        for segment in decomposition.all_segments():
            distinct_keys.add(ScopeKey.from_segment(segment).canonical())

    reports: list[DetectionReport | None] = [None] * len(corpus.sequences)

    def _run(index: int) -> None:
        reports[index] = detect_decomposed(
            corpus.sequences[index], decompositions[index], store, llm, config
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(_run, range(len(corpus.sequences))))
    else:
        for index in range(len(corpus.sequences)):
            _run(index)

    tp = fp = fn = tn = 0
    llm_calls = 0
    for seq, report in zip(corpus.sequences, reports):
        llm_calls += report.llm_call_count
        predicted_anomaly = report.final_label is Label.ANOMALY
        actual_anomaly = seq.label is Label.ANOMALY
        if predicted_anomaly and actual_anomaly:
            tp += 1
        elif predicted_anomaly:
            fp += 1
        elif actual_anomaly:
            fn += 1
        else:
            tn += 1

    precision = tp / (tp + fp) if (tp + fp) > 0 else None
    recall = tp / (tp + fn) if (tp + fn) > 0 else None
    if precision is None or recall is None or (precision + recall) == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)

    metrics = Metrics(
        precision=precision,
        recall=recall,
        f1=f1,
        llm_call_fraction=llm_calls / len(corpus.sequences) if corpus.sequences else 0.0,
        distinct_seq_ratio=total_events / len(distinct_keys) if distinct_keys else None,
        true_positives=tp,
        false_positives=fp,
        false_negatives=fn,
        true_negatives=tn,
        llm_calls=llm_calls,
        sequences=len(corpus.sequences),
        events=total_events,
        distinct_keys=len(distinct_keys),
    )
    return EvaluationResult(metrics=metrics, reports=list(reports) if keep_reports else [])
