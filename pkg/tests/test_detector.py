from __future__ import annotations

import pytest

from logtriad.corpus import Label, LogSequence, SequenceCorpus, Split
from logtriad.decompose import Level, decompose
from logtriad.detector import (
    DetectorConfig,
    LlmMode,
    VerdictMethod,
    detect_sequence,
    evaluate,
    llm_verify,
    pattern_match,
    select_examples,
)
from logtriad.errors import LlmCallBudgetExceeded, UnlabeledCorpus
from logtriad.knowledge import KnowledgeStore, Provenance, ScopeKey, ingest_training
from logtriad.llm import FixtureLlm, always_anomaly_llm, always_normal_llm

from oracles import confusion_metrics


def _train_store(tree, *sequences):
    store = KnowledgeStore()
    corpus = SequenceCorpus(
        sequences=tuple(
            LogSequence(sequence_id=f"t{i}", events=events, label=Label.NORMAL)
            for i, events in enumerate(sequences)
        ),
        split=Split.TRAIN,
    )
    ingest_training(corpus, tree, store)
    return store


def _first_status_segment(tree, events):
    seq = LogSequence(sequence_id="probe", events=events)
    return decompose(seq, tree).status_segments[0]


def test_pattern_match_unknown_on_empty_store(toy_tree):
    segment = _first_status_segment(toy_tree, ("T1", "T2"))
    assert pattern_match(segment, KnowledgeStore()) is None


def test_pattern_match_training_pattern(toy_tree):
    store = _train_store(toy_tree, ("T1", "T2", "T3"))
    segment = _first_status_segment(toy_tree, ("T1", "T2"))
    verdict = pattern_match(segment, store)
    assert verdict.label is Label.NORMAL
    assert verdict.method is VerdictMethod.PATTERN_MATCH
    assert verdict.llm_called is False


def test_pattern_match_llm_verdict_reuse(toy_tree):
    store = KnowledgeStore()
    segment = _first_status_segment(toy_tree, ("T1", "T2"))
    key = ScopeKey.from_segment(segment)
    store.upsert(key, Label.ANOMALY, "bad", Provenance.LLM_VERDICT)
    verdict = pattern_match(segment, store)
    assert verdict.label is Label.ANOMALY
    assert verdict.method is VerdictMethod.KNOWLEDGE_REUSE


def test_pattern_match_human_override_reuse(toy_tree):
    store = KnowledgeStore()
    segment = _first_status_segment(toy_tree, ("T1", "T2"))
    key = ScopeKey.from_segment(segment)
    store.upsert(key, Label.ANOMALY, "bad", Provenance.LLM_VERDICT)
    store.override(key, Label.NORMAL, "checked")
    verdict = pattern_match(segment, store)
    assert verdict.label is Label.NORMAL
    assert verdict.method is VerdictMethod.HUMAN_OVERRIDE_REUSE


def test_select_examples_scarce_and_empty(toy_tree):
    store = _train_store(toy_tree, ("T1", "T2", "T3"))
    examples = select_examples(store, ("root", "session", "open"), Level.STATUS, k=5)
    assert examples == ["open → started succeeded"]
    assert select_examples(store, ("root", "nowhere", "x"), Level.STATUS, k=5) == []


def test_select_examples_frequency_then_lexicographic():
    store = KnowledgeStore()
    parent = ("root", "session", "open")

    def key(label):
        return ScopeKey(level=Level.STATUS, parent_path=parent, node_labels=(label,))

    store.upsert(key("zeta"), Label.NORMAL, "", Provenance.TRAINING_PATTERN)
    store.upsert(key("zeta"), Label.NORMAL, "", Provenance.TRAINING_PATTERN)
    store.upsert(key("beta"), Label.NORMAL, "", Provenance.TRAINING_PATTERN)
    store.upsert(key("alpha"), Label.NORMAL, "", Provenance.TRAINING_PATTERN)
    store.upsert(key("bad"), Label.ANOMALY, "x", Provenance.LLM_VERDICT)

    examples = select_examples(store, parent, Level.STATUS, k=2)
    # zeta (freq 2) first, then equal-frequency ties in key order
    assert examples == ["open → zeta", "open → alpha"]
    # anomalous entries are never offered as normal examples
    assert "open → bad" not in select_examples(store, parent, Level.STATUS, k=10)


def test_llm_verify_banks_verdict(toy_tree):
    store = KnowledgeStore()
    segment = _first_status_segment(toy_tree, ("T1", "T2"))
    llm = always_anomaly_llm()
    verdict = llm_verify(segment, [], llm, store, source_sequence_id="blk_1")
    assert verdict.label is Label.ANOMALY
    assert verdict.method is VerdictMethod.LLM
    assert verdict.llm_called is True
    banked = store.query(ScopeKey.from_segment(segment))
    assert banked.provenance is Provenance.LLM_VERDICT
    assert banked.label is Label.ANOMALY
    # a second pattern_match now reuses it: no further LLM path needed
    assert pattern_match(segment, store).method is VerdictMethod.KNOWLEDGE_REUSE


def test_llm_verify_fixture_verbatim(toy_tree):
    store = KnowledgeStore()
    segment = _first_status_segment(toy_tree, ("T1", "T2"))
    key = ScopeKey.from_segment(segment).canonical()
    llm = FixtureLlm(verdicts={key: ("Normal", "seen in staging, benign")})
    verdict = llm_verify(segment, [], llm, store)
    assert verdict.label is Label.NORMAL
    assert verdict.explanation == "seen in staging, benign"


def test_detect_fully_known_sequence(toy_tree):
    store = _train_store(toy_tree, ("T1", "T2", "T3"))
    seq = LogSequence(sequence_id="blk_1", events=("T1", "T2", "T3"))
    report = detect_sequence(seq, toy_tree, store, None, DetectorConfig(llm_mode=LlmMode.FLAG_UNKNOWN))
    assert report.final_label is Label.NORMAL
    assert report.llm_call_count == 0
    assert report.levels_completed == (Level.STATUS, Level.ACTION, Level.ENTITY)
    assert all(v.label is Label.NORMAL for v in report.trace)
    assert report.anomalous_segment is None


def test_detect_early_stop_and_reuse(demo_tree, micro_train):
    store = KnowledgeStore()
    ingest_training(micro_train, demo_tree, store)
    seq = LogSequence(sequence_id="x", events=("E1", "E2", "E9", "E11", "E3", "E4"))
    llm = always_anomaly_llm()
    config = DetectorConfig(llm_mode=LlmMode.ALWAYS_ANOMALY)

    report = detect_sequence(seq, demo_tree, store, llm, config)
    assert report.final_label is Label.ANOMALY
    assert report.llm_call_count == 1
    assert report.anomalous_segment.span == (2, 4)
    assert report.anomalous_segment.template_ids == ("E9", "E11")
    # early stop: no action/entity verdicts, nothing after the hit
    assert all(v.key.level is Level.STATUS for v in report.trace)
    assert report.trace[-1].label is Label.ANOMALY
    assert report.levels_completed == ()

    second = detect_sequence(seq, demo_tree, store, always_anomaly_llm(), config)
    assert second.final_label is Label.ANOMALY
    assert second.llm_call_count == 0
    assert second.anomalous_segment.span == report.anomalous_segment.span
    assert second.trace[-1].method is VerdictMethod.KNOWLEDGE_REUSE


def test_detect_flag_unknown_zero_llm(demo_tree, micro_train):
    store = KnowledgeStore()
    ingest_training(micro_train, demo_tree, store)
    seq = LogSequence(sequence_id="x", events=("E1", "E2", "E9", "E11", "E3", "E4"))
    report = detect_sequence(seq, demo_tree, store, None, DetectorConfig(llm_mode=LlmMode.FLAG_UNKNOWN))
    assert report.final_label is Label.ANOMALY
    assert report.llm_call_count == 0
    assert report.trace[-1].method is VerdictMethod.FLAG_UNKNOWN
    assert report.anomalous_segment.span == (2, 4)
    # flag-unknown stores nothing: the store is exactly the trained state
    assert all(e.provenance is Provenance.TRAINING_PATTERN for e in store.entries.values())


def test_detect_always_normal_banks_reusable_keys(toy_tree):
    store = KnowledgeStore()
    seq = LogSequence(sequence_id="blk_1", events=("T1", "T2", "T3"))
    llm = always_normal_llm()
    config = DetectorConfig(llm_mode=LlmMode.ALWAYS_NORMAL)
    first = detect_sequence(seq, toy_tree, store, llm, config)
    assert first.final_label is Label.NORMAL
    assert first.llm_call_count == 5  # 2 S + 2 A + 1 E, all unknown
    second = detect_sequence(seq, toy_tree, store, llm, config)
    assert second.llm_call_count == 0
    assert llm.counters.verify_calls == 5


def test_detect_budget_exceeded(toy_tree):
    store = KnowledgeStore()
    seq = LogSequence(sequence_id="blk_1", events=("T1", "T2", "T3"))
    config = DetectorConfig(llm_mode=LlmMode.ALWAYS_NORMAL, max_llm_calls_per_sequence=2)
    with pytest.raises(LlmCallBudgetExceeded):
        detect_sequence(seq, toy_tree, store, always_normal_llm(), config)


def test_detect_anomaly_propagates_from_single_unknown(demo_tree, micro_train):
    # any sequence containing >= 1 unknown status segment is anomalous
    store = KnowledgeStore()
    ingest_training(micro_train, demo_tree, store)
    config = DetectorConfig(llm_mode=LlmMode.ALWAYS_ANOMALY)
    for events in (("E16", "E18"), ("E22", "E24"), ("E1", "E2", "E6", "E8", "E3", "E4")):
        seq = LogSequence(sequence_id="p", events=events)
        report = detect_sequence(seq, demo_tree, store, always_anomaly_llm(), config)
        assert report.final_label is Label.ANOMALY


def test_config_validation():
    with pytest.raises(ValueError):
        DetectorConfig(k=0)
    with pytest.raises(ValueError):
        DetectorConfig(max_llm_calls_per_sequence=-1)


def _label_list(corpus):
    return [seq.label.value for seq in corpus.sequences]


def test_evaluate_micro_corpus_against_oracle(demo_tree, micro_train, micro_test):
    store = KnowledgeStore()
    ingest_training(micro_train, demo_tree, store)
    result = evaluate(
        micro_test,
        demo_tree,
        store,
        None,
        DetectorConfig(llm_mode=LlmMode.FLAG_UNKNOWN),
        keep_reports=True,
    )
    metrics = result.metrics
    predicted = [r.final_label.value for r in result.reports]
    precision, recall, f1, tp, fp, fn, tn = confusion_metrics(_label_list(micro_test), predicted)
    assert metrics.precision == pytest.approx(precision, abs=1e-12)
    assert metrics.recall == pytest.approx(recall, abs=1e-12)
    assert metrics.f1 == pytest.approx(f1, abs=1e-12)
    assert (metrics.true_positives, metrics.false_positives) == (tp, fp)
    assert (metrics.false_negatives, metrics.true_negatives) == (fn, tn)
    # frozen hand-computed expectations for the designed corpus
    assert (tp, fp, fn, tn) == (5, 2, 1, 12)
    assert metrics.precision == pytest.approx(5 / 7, abs=1e-12)
    assert metrics.recall == pytest.approx(5 / 6, abs=1e-12)
    assert metrics.f1 == pytest.approx(10 / 13, abs=1e-12)
    assert metrics.llm_calls == 0


def test_evaluate_perfect_predictions(toy_tree):
    # 4 sequences, 2 anomalies; train exactly the normal patterns
    store = _train_store(toy_tree, ("T1", "T2", "T3"), ("T3",))
    sequences = (
        LogSequence(sequence_id="s1", events=("T1", "T2", "T3"), label=Label.NORMAL),
        LogSequence(sequence_id="s2", events=("T3",), label=Label.NORMAL),
        LogSequence(sequence_id="s3", events=("T2", "T1"), label=Label.ANOMALY),
        LogSequence(sequence_id="s4", events=("T3", "T3"), label=Label.ANOMALY),
    )
    corpus = SequenceCorpus(sequences=sequences, split=Split.TEST)
    metrics = evaluate(
        corpus, toy_tree, store, None, DetectorConfig(llm_mode=LlmMode.FLAG_UNKNOWN)
    ).metrics
    assert metrics.precision == metrics.recall == metrics.f1 == 1.0


def test_evaluate_all_normal_predictions_guard(toy_tree):
    # the detector knows every pattern, so it never predicts anomaly:
    # recall 0, precision undefined (absent), f1 absent
    store = _train_store(toy_tree, ("T1", "T2", "T3"), ("T2", "T1"), ("T3", "T3"), ("T3",))
    sequences = (
        LogSequence(sequence_id="s1", events=("T1", "T2", "T3"), label=Label.NORMAL),
        LogSequence(sequence_id="s2", events=("T3",), label=Label.NORMAL),
        LogSequence(sequence_id="s3", events=("T2", "T1"), label=Label.ANOMALY),
        LogSequence(sequence_id="s4", events=("T3", "T3"), label=Label.ANOMALY),
    )
    corpus = SequenceCorpus(sequences=sequences, split=Split.TEST)
    metrics = evaluate(
        corpus, toy_tree, store, None, DetectorConfig(llm_mode=LlmMode.FLAG_UNKNOWN)
    ).metrics
    assert metrics.precision is None
    assert metrics.recall == 0.0
    assert metrics.f1 is None


def test_evaluate_rejects_unlabeled(toy_tree):
    corpus = SequenceCorpus(
        sequences=(LogSequence(sequence_id="s", events=("T1",)),), split=Split.TEST
    )
    with pytest.raises(UnlabeledCorpus):
        evaluate(corpus, toy_tree, KnowledgeStore(), None, DetectorConfig())


def test_evaluate_distinct_seq_ratio(toy_tree):
    sequences = tuple(
        LogSequence(sequence_id=f"s{i}", events=("T1", "T2", "T3"), label=Label.NORMAL)
        for i in range(10)
    )
    corpus = SequenceCorpus(sequences=sequences, split=Split.TEST)
    metrics = evaluate(
        corpus, toy_tree, KnowledgeStore(), None, DetectorConfig(llm_mode=LlmMode.FLAG_UNKNOWN)
    ).metrics
    # 30 events over 5 distinct keys (2 S + 2 A + 1 E shared by all rows)
    assert metrics.events == 30
    assert metrics.distinct_keys == 5
    assert metrics.distinct_seq_ratio == pytest.approx(6.0)
