"""Flat sequence -> hierarchical execution segments.

A sequence is annotated event-by-event with its tree leaf path, then cut into
maximal contiguous runs: same-entity runs define the entity layer, same-action
runs inside them define the status layer. Each run becomes one segment
rendered as ``<parent> -> <node sequence>``:

* status segment  parent = action node, nodes = the status leaves in order
* action segment  parent = entity node, nodes = one action per action run
* entity segment  parent = root,        nodes = one entity per entity run

Status spans partition the sequence, action spans partition it the same way
one level up, and the single entity segment covers everything, so
concatenating status segments reconstructs the original event list exactly.
Everything here is pure; one immutable tree can serve many threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .corpus import LogSequence
from .errors import EmptySequence, SpanOutOfBounds
from .hierarchy import SemanticTree, TreeNode, lookup_leaf

RENDER_ARROW = " → "


class Level(str, Enum):
    STATUS = "S"
    ACTION = "A"
    ENTITY = "E"


@dataclass(frozen=True)
class Segment:
    """One contiguous execution unit at a single granularity."""

    level: Level
    parent_id: str
    parent_path: tuple[str, ...]  # labels root..parent inclusive
    node_ids: tuple[str, ...]
    node_labels: tuple[str, ...]
    span: tuple[int, int]  # half-open [start, end) into source events
    source_sequence_id: str

    def rendered(self) -> str:
        return f"{self.parent_path[-1]}{RENDER_ARROW}{' '.join(self.node_labels)}"


@dataclass(frozen=True)
class Decomposition:
    status_segments: tuple[Segment, ...]
    action_segments: tuple[Segment, ...]
    entity_segments: tuple[Segment, ...]  # always exactly one

    def all_segments(self) -> tuple[Segment, ...]:
        return self.status_segments + self.action_segments + self.entity_segments

    def at_level(self, level: Level) -> tuple[Segment, ...]:
        if level is Level.STATUS:
            return self.status_segments
        if level is Level.ACTION:
            return self.action_segments
        return self.entity_segments


def annotate(sequence: LogSequence, tree: SemanticTree) -> list[tuple[TreeNode, TreeNode, TreeNode]]:
    """One (entity, action, status) node path per event, in event order."""
    return [lookup_leaf(tree, template_id) for template_id in sequence.events]


def _runs(values: list[str]) -> list[tuple[int, int]]:
    """Half-open spans of maximal runs of equal values."""
    spans = []
    start = 0
    for i in range(1, len(values)):
        if values[i] != values[start]:
            spans.append((start, i))
            start = i
    spans.append((start, len(values)))
    return spans


def decompose(sequence: LogSequence, tree: SemanticTree) -> Decomposition:
    if not sequence.events:
        raise EmptySequence(sequence.sequence_id)
    paths = annotate(sequence, tree)
    entity_ids = [entity.node_id for entity, _, _ in paths]
    action_ids = [action.node_id for _, action, _ in paths]

    status_segments: list[Segment] = []
    action_segments: list[Segment] = []
    entity_nodes: list[TreeNode] = []

    for e_start, e_end in _runs(entity_ids):
        entity_node = paths[e_start][0]
        entity_nodes.append(entity_node)
        run_actions: list[TreeNode] = []
        for offset_start, offset_end in _runs(action_ids[e_start:e_end]):
            a_start, a_end = e_start + offset_start, e_start + offset_end
            action_node = paths[a_start][1]
            run_actions.append(action_node)
            statuses = [paths[i][2] for i in range(a_start, a_end)]
            status_segments.append(
                Segment(
                    level=Level.STATUS,
                    parent_id=action_node.node_id,
                    parent_path=tree.label_path(action_node.node_id),
                    node_ids=tuple(s.node_id for s in statuses),
                    node_labels=tuple(s.label for s in statuses),
                    span=(a_start, a_end),
                    source_sequence_id=sequence.sequence_id,
                )
            )
        action_segments.append(
            Segment(
                level=Level.ACTION,
                parent_id=entity_node.node_id,
                parent_path=tree.label_path(entity_node.node_id),
                node_ids=tuple(a.node_id for a in run_actions),
                node_labels=tuple(a.label for a in run_actions),
                span=(e_start, e_end),
                source_sequence_id=sequence.sequence_id,
            )
        )

    entity_segment = Segment(
        level=Level.ENTITY,
        parent_id=tree.root.node_id,
        parent_path=(tree.root.label,),
        node_ids=tuple(e.node_id for e in entity_nodes),
        node_labels=tuple(e.label for e in entity_nodes),
        span=(0, len(sequence.events)),
        source_sequence_id=sequence.sequence_id,
    )
    return Decomposition(
        status_segments=tuple(status_segments),
        action_segments=tuple(action_segments),
        entity_segments=(entity_segment,),
    )


def segment_events(segment: Segment, source: LogSequence) -> list[str]:
    """The template ids covered by a segment's span."""
    start, end = segment.span
    if not (0 <= start < end <= len(source.events)):
        raise SpanOutOfBounds(segment.span, len(source.events))
    return list(source.events[start:end])
