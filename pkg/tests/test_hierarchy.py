from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from logtriad.corpus import TemplateCatalog
from logtriad.errors import (
    DuplicateTriple,
    ExtractionInvalid,
    LlmUnavailable,
    MissingTriple,
    UnboundTemplate,
)
from logtriad.hierarchy import (
    build_tree,
    extract_all,
    extract_semantics,
    lookup_leaf,
    make_triple,
    normalize_token,
    tree_stats,
)
from logtriad.llm import ExtractionResult, FixtureLlm


class RecordingLlm:
    """Extraction double returning scripted fields and counting calls."""

    def __init__(self, fields_by_template):
        self.fields_by_template = fields_by_template
        self.extract_calls = 0

    def extract(self, template_id, text):
        self.extract_calls += 1
        entity, action, status = self.fields_by_template[template_id]
        return ExtractionResult(entity=entity, action=action, status=status, raw="scripted")


def test_normalize_token():
    assert normalize_token("  Packet   Responder ") == "packet_responder"
    assert normalize_token("Session") == "session"
    assert normalize_token("a|b,c/d") == "a_b_c_d"


@given(st.text(max_size=40))
def test_normalize_idempotent(text):
    once = normalize_token(text)
    assert normalize_token(once) == once


def test_extract_semantics_normalizes():
    llm = RecordingLlm({"E1": ("Session", "Open", "Started")})
    triple = extract_semantics(("E1", "Open session started"), llm)
    assert (triple.entity, triple.action, triple.status) == ("session", "open", "started")
    assert triple.raw_response == "scripted"


def test_extract_semantics_invalid():
    llm = RecordingLlm({"E1": ("", "open", "started")})
    with pytest.raises(ExtractionInvalid):
        extract_semantics(("E1", "whatever"), llm)


def test_fixture_covers_catalog_no_llm_contact(demo_catalog, demo_fixture):
    class Exploding:
        def extract(self, template_id, text):
            raise AssertionError("LLM must not be contacted when fixture covers catalog")

    triples = extract_all(demo_catalog, llm=Exploding(), fixture=demo_fixture)
    assert len(triples) == len(demo_catalog)


def test_fixture_passthrough_for_bundled_hdfs(demo_catalog, demo_fixture):
    triples = {t.template_id: t for t in extract_all(demo_catalog, fixture=demo_fixture)}
    assert (triples["E1"].entity, triples["E1"].action, triples["E1"].status) == (
        "session",
        "open",
        "started",
    )
    # frozen ground truth from the bundled annotation
    assert (triples["E7"].entity, triples["E7"].action, triples["E7"].status) == (
        "block",
        "write",
        "finished",
    )


def test_extract_all_without_fixture_or_llm(toy_catalog):
    with pytest.raises(LlmUnavailable):
        extract_all(toy_catalog, llm=None, fixture=None)


def test_extract_all_partial_fixture_uses_llm(toy_catalog):
    fixture = {"T1": ("session", "open", "started")}
    llm = RecordingLlm(
        {
            "T2": ("session", "open", "succeeded"),
            "T3": ("block", "write", "started"),
        }
    )
    triples = extract_all(toy_catalog, llm=llm, fixture=fixture, parallelism=1)
    assert llm.extract_calls == 2
    assert [t.template_id for t in triples] == ["T1", "T2", "T3"]


def test_build_singleton_tree():
    catalog = TemplateCatalog(templates={"E1": "Open session started"})
    tree = build_tree(catalog, [make_triple("E1", "session", "open", "started")])
    stats = tree_stats(tree)
    assert (stats.entity_count, stats.action_count, stats.status_count, stats.template_count) == (
        1,
        1,
        1,
        1,
    )
    entity, action, status = lookup_leaf(tree, "E1")
    assert (entity.label, action.label, status.label) == ("session", "open", "started")


def test_build_three_template_tree(toy_tree):
    stats = tree_stats(toy_tree)
    assert stats.entity_count == 2
    assert stats.action_count == 2
    assert stats.status_count == 3
    assert stats.template_count == 3
    # each template gets its own distinct leaf path
    leaves = {lookup_leaf(toy_tree, tid)[2].node_id for tid in ("T1", "T2", "T3")}
    assert len(leaves) == 3


def test_duplicate_triples_disambiguated():
    catalog = TemplateCatalog(templates={"E1": "open session start", "E2": "session opening started"})
    triples = [
        make_triple("E1", "session", "open", "started"),
        make_triple("E2", "session", "open", "started"),
    ]
    tree = build_tree(catalog, triples)
    first = lookup_leaf(tree, "E1")[2]
    second = lookup_leaf(tree, "E2")[2]
    assert first.label == "started#1"
    assert second.label == "started#2"
    assert first.parent_id == second.parent_id


def test_missing_and_duplicate_triples(toy_catalog, toy_triples):
    with pytest.raises(MissingTriple):
        build_tree(toy_catalog, toy_triples[:2])
    with pytest.raises(DuplicateTriple):
        build_tree(toy_catalog, toy_triples + [toy_triples[0]])


def test_lookup_unbound(toy_tree):
    with pytest.raises(UnboundTemplate):
        lookup_leaf(toy_tree, "E99")


def test_tree_invariants(demo_tree, demo_catalog):
    # 4 levels: every root-to-leaf path has length 3
    for leaf_id in demo_tree.template_of_leaf:
        assert len(demo_tree.label_path(leaf_id)) == 4  # root + 3
    # total bijection between templates and leaves
    assert len(demo_tree.leaf_of_template) == len(demo_catalog)
    assert len(set(demo_tree.leaf_of_template.values())) == len(demo_catalog)
    # sibling labels unique under a common parent, every internal node nonempty
    for node in demo_tree.nodes.values():
        if node.level != "status":
            labels = [child.label for child in demo_tree.children_of(node.node_id)]
            assert len(labels) == len(set(labels))
            assert labels
    stats = tree_stats(demo_tree)
    assert stats.status_count == stats.template_count


def test_build_tree_deterministic(toy_catalog, toy_triples):
    a = build_tree(toy_catalog, toy_triples)
    b = build_tree(toy_catalog, list(reversed(toy_triples)))
    assert a.nodes == b.nodes
    assert a.leaf_of_template == b.leaf_of_template


def test_tree_stats_branching(demo_tree):
    stats = tree_stats(demo_tree)
    assert stats.branching["root"].max == stats.entity_count
    assert stats.branching["root"].mean == float(stats.entity_count)
    assert stats.branching["entity"].mean == pytest.approx(
        stats.action_count / stats.entity_count
    )
    assert stats.branching["action"].mean == pytest.approx(
        stats.status_count / stats.action_count
    )


def test_templates_under(demo_tree):
    session_templates = demo_tree.templates_under("e:session")
    assert set(session_templates) == {"E1", "E2", "E3", "E4"}
    assert demo_tree.templates_under("s:session/open/started") == ["E1"]


def test_fixture_llm_extract_counts(demo_fixture):
    llm = FixtureLlm(extraction=demo_fixture)
    result = llm.extract("E7", "Write block finished")
    assert (result.entity, result.action, result.status) == ("block", "write", "finished")
    assert llm.counters.extract_calls == 1
    with pytest.raises(LlmUnavailable):
        llm.extract("E999", "unknown")
