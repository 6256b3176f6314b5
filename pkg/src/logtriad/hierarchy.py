"""Entity/action/status extraction and the four-level semantic tree.

Every log template is reduced to a (entity, action, status) triple; the tree
roots all entities, groups actions under their entity, and binds each status
leaf to exactly one template (a total bijection over the catalog). Two
templates that normalize to the same triple get disambiguated sibling leaves
("started#1", "started#2", ... in template_id order) so the bijection holds.

Node ids are path-based and stable: ``root``, ``e:<entity>``,
``a:<entity>/<action>``, ``s:<entity>/<action>/<status>``.
"""

from __future__ import annotations

import re
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import TemplateCatalog, _read_csv_rows
from .errors import (
    DuplicateTriple,
    EmptyFile,
    ExtractionInvalid,
    MalformedRecord,
    MissingTriple,
    UnboundTemplate,
)

ROOT_ID = "root"
ROOT_LABEL = "root"

FIXTURE_HEADER = ["template_id", "entity", "action", "status"]

_WHITESPACE = re.compile(r"\s+")
_KEY_SEPARATORS = re.compile(r"[|,/]")


def normalize_token(text: str) -> str:
    """Lowercase, trim, join inner whitespace with underscores.

    Separator characters used by canonical scope keys (| , /) are folded to
    underscores too, so normalized labels can never break key parsing.
    Idempotent: normalize(normalize(x)) == normalize(x).
    """
    token = _WHITESPACE.sub("_", text.strip().lower())
    return _KEY_SEPARATORS.sub("_", token)


@dataclass(frozen=True)
class SemanticTriple:
    template_id: str
    entity: str
    action: str
    status: str
    raw_response: str = ""  # kept for audit when the triple came from an LLM

    def __post_init__(self):
        for name in ("entity", "action", "status"):
            if not getattr(self, name):
                raise ValueError(f"{name} token empty after normalization")


def make_triple(template_id: str, entity: str, action: str, status: str, raw: str = "") -> SemanticTriple:
    return SemanticTriple(
        template_id=template_id,
        entity=normalize_token(entity),
        action=normalize_token(action),
        status=normalize_token(status),
        raw_response=raw,
    )


@dataclass(frozen=True)
class TreeNode:
    node_id: str
    level: str  # "root" | "entity" | "action" | "status"
    label: str
    parent_id: str | None
    children: tuple[str, ...]


@dataclass(frozen=True)
class BranchingStats:
    max: int
    mean: float


@dataclass(frozen=True)
class TreeStats:
    entity_count: int
    action_count: int
    status_count: int
    template_count: int
    branching: dict[str, BranchingStats]  # parent level -> child fan-out


@dataclass(frozen=True)
class SemanticTree:
    """Immutable 4-level hierarchy; shareable across threads."""

    nodes: dict[str, TreeNode]
    leaf_of_template: dict[str, str]  # template_id -> status node id
    template_of_leaf: dict[str, str]  # status node id -> template_id

    @property
    def root(self) -> TreeNode:
        return self.nodes[ROOT_ID]

    def node(self, node_id: str) -> TreeNode:
        return self.nodes[node_id]

    def children_of(self, node_id: str) -> list[TreeNode]:
        return [self.nodes[cid] for cid in self.nodes[node_id].children]

    def label_path(self, node_id: str) -> tuple[str, ...]:
        """Labels from root down to node_id inclusive."""
        path: list[str] = []
        current: str | None = node_id
        while current is not None:
            node = self.nodes[current]
            path.append(node.label)
            current = node.parent_id
        return tuple(reversed(path))

    def templates_under(self, node_id: str) -> list[str]:
        """Template ids bound below (or at) a node, in leaf order."""
        node = self.nodes[node_id]
        if node.level == "status":
            return [self.template_of_leaf[node.node_id]]
        out: list[str] = []
        for child_id in node.children:
            out.extend(self.templates_under(child_id))
        return out


def build_tree(catalog: TemplateCatalog, triples: list[SemanticTriple]) -> SemanticTree:
    """Assemble the tree from exactly one triple per catalog template.

    Deterministic: nodes are created in lexicographic template_id order, and
    identical triples are disambiguated with "#1"/"#2"... suffixes in that
    same order.
    """
    by_template: dict[str, SemanticTriple] = {}
    for triple in triples:
        if triple.template_id in by_template:
            raise DuplicateTriple(triple.template_id)
        by_template[triple.template_id] = triple
    for template_id in catalog.templates:
        if template_id not in by_template:
            raise MissingTriple(template_id)
    ordered_ids = sorted(catalog.templates)

    collisions: dict[tuple[str, str, str], list[str]] = defaultdict(list)
    for template_id in ordered_ids:
        t = by_template[template_id]
        collisions[(t.entity, t.action, t.status)].append(template_id)

    nodes: dict[str, TreeNode] = {}
    children: dict[str, list[str]] = defaultdict(list)
    leaf_of_template: dict[str, str] = {}

    def _ensure(node_id: str, level: str, label: str, parent_id: str) -> str:
        if node_id not in nodes:
            nodes[node_id] = TreeNode(node_id, level, label, parent_id, ())
            children[parent_id].append(node_id)
        return node_id

    nodes[ROOT_ID] = TreeNode(ROOT_ID, "root", ROOT_LABEL, None, ())
    for template_id in ordered_ids:
        t = by_template[template_id]
        entity_id = _ensure(f"e:{t.entity}", "entity", t.entity, ROOT_ID)
        action_id = _ensure(f"a:{t.entity}/{t.action}", "action", t.action, entity_id)
        siblings = collisions[(t.entity, t.action, t.status)]
        if len(siblings) > 1:
            status_label = f"{t.status}#{siblings.index(template_id) + 1}"
        else:
            status_label = t.status
        status_id = f"s:{t.entity}/{t.action}/{status_label}"
        _ensure(status_id, "status", status_label, action_id)
        leaf_of_template[template_id] = status_id

    frozen = {
        node_id: TreeNode(
            node.node_id, node.level, node.label, node.parent_id, tuple(children.get(node_id, []))
        )
        for node_id, node in nodes.items()
    }
    return SemanticTree(
        nodes=frozen,
        leaf_of_template=leaf_of_template,
        template_of_leaf={leaf: tid for tid, leaf in leaf_of_template.items()},
    )


def lookup_leaf(tree: SemanticTree, template_id: str) -> tuple[TreeNode, TreeNode, TreeNode]:
    """The unique (entity, action, status) node path for a bound template."""
    leaf_id = tree.leaf_of_template.get(template_id)
    if leaf_id is None:
        raise UnboundTemplate(template_id)
    status = tree.nodes[leaf_id]
    action = tree.nodes[status.parent_id]
    entity = tree.nodes[action.parent_id]
    return entity, action, status


def tree_stats(tree: SemanticTree) -> TreeStats:
    by_level: dict[str, list[TreeNode]] = defaultdict(list)
    for node in tree.nodes.values():
        by_level[node.level].append(node)

    def _branching(parents: list[TreeNode]) -> BranchingStats:
        if not parents:
            return BranchingStats(max=0, mean=0.0)
        fan_outs = [len(p.children) for p in parents]
        return BranchingStats(max=max(fan_outs), mean=sum(fan_outs) / len(fan_outs))

    return TreeStats(
        entity_count=len(by_level["entity"]),
        action_count=len(by_level["action"]),
        status_count=len(by_level["status"]),
        template_count=len(tree.leaf_of_template),
        branching={
            "root": _branching([tree.root]),
            "entity": _branching(by_level["entity"]),
            "action": _branching(by_level["action"]),
        },
    )


# --- extraction --------------------------------------------------------------


def extract_semantics(template: tuple[str, str], llm) -> SemanticTriple:
    """Ask the LLM client for the (entity, action, status) of one template.

    The client is responsible for prompting and one parse retry; this wrapper
    normalizes tokens and validates that all three survive normalization.
    """
    template_id, text = template
    result = llm.extract(template_id, text)
    try:
        return make_triple(template_id, result.entity, result.action, result.status, raw=result.raw)
    except ValueError:
        raise ExtractionInvalid(template_id, result.raw) from None


def load_extraction_fixture(path: str | Path) -> dict[str, tuple[str, str, str]]:
    """Read a `template_id,entity,action,status` fixture file."""
    rows = _read_csv_rows(Path(path).read_text(encoding="utf-8"))
    if not rows:
        raise EmptyFile(str(path))
    header_line, header = rows[0]
    if [h.strip() for h in header] != FIXTURE_HEADER:
        raise MalformedRecord(header_line, f"expected header {','.join(FIXTURE_HEADER)}")
    fixture: dict[str, tuple[str, str, str]] = {}
    for line_num, row in rows[1:]:
        if len(row) != 4:
            raise MalformedRecord(line_num, f"expected 4 fields, got {len(row)}")
        template_id = row[0].strip()
        if not template_id:
            raise MalformedRecord(line_num, "empty template_id")
        fixture[template_id] = (row[1], row[2], row[3])
    return fixture


def extract_all(
    catalog: TemplateCatalog,
    llm=None,
    fixture: dict[str, tuple[str, str, str]] | None = None,
    parallelism: int = 4,
) -> list[SemanticTriple]:
    """Triples for the whole catalog, fixture-first.

    If the fixture covers every template no LLM is contacted at all; otherwise
    each template goes through `extract_semantics`, up to `parallelism`
    concurrent calls.
    """
    fixture = fixture or {}
    if all(tid in fixture for tid in catalog.templates):
        return [
            make_triple(tid, *fixture[tid])
            for tid in sorted(catalog.templates)
        ]
    if llm is None:
        missing = sorted(tid for tid in catalog.templates if tid not in fixture)
        from .errors import LlmUnavailable

        raise LlmUnavailable(f"no live LLM and fixture misses templates: {', '.join(missing)}")
    items = sorted(catalog.templates.items())
    triples: dict[str, SemanticTriple] = {
        tid: make_triple(tid, *fixture[tid]) for tid, _ in items if tid in fixture
    }
    pending = [(tid, text) for tid, text in items if tid not in fixture]
    if parallelism > 1 and len(pending) > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            for triple in pool.map(lambda item: extract_semantics(item, llm), pending):
                triples[triple.template_id] = triple
    else:
        for item in pending:
            triple = extract_semantics(item, llm)
            triples[triple.template_id] = triple
    return [triples[tid] for tid, _ in items]
