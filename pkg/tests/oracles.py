"""Independent oracles the test suite checks the engine against.

These deliberately avoid the library's own segmentation and metric code:
the decomposition oracle enumerates run boundaries by pairwise comparison of
annotated leaf paths, and the metrics oracle counts a confusion matrix from
two label lists. Keep them dumb.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class OracleSegment:
    parent_label: str
    node_labels: tuple[str, ...]
    span: tuple[int, int]


@dataclass(frozen=True)
class OracleDecomposition:
    status_segments: tuple[OracleSegment, ...]
    action_segments: tuple[OracleSegment, ...]
    entity_segments: tuple[OracleSegment, ...]


def brute_force_decompose(paths: list[tuple[str, str, str]]) -> OracleDecomposition:
    """Segment a sequence of (entity, action, status) label triples.

    Boundaries come from pairwise comparison only: a status-level boundary
    sits wherever the (entity, action) pair changes, an action-level boundary
    wherever the entity changes.
    """
    n = len(paths)
    assert n > 0

    status_bounds = [0] + [
        i for i in range(1, n) if (paths[i][0], paths[i][1]) != (paths[i - 1][0], paths[i - 1][1])
    ] + [n]
    entity_bounds = [0] + [i for i in range(1, n) if paths[i][0] != paths[i - 1][0]] + [n]

    status_segments = tuple(
        OracleSegment(
            parent_label=paths[start][1],
            node_labels=tuple(paths[i][2] for i in range(start, end)),
            span=(start, end),
        )
        for start, end in zip(status_bounds, status_bounds[1:])
    )
    action_segments = []
    for start, end in zip(entity_bounds, entity_bounds[1:]):
        inner = [b for b in status_bounds if start <= b <= end]
        action_segments.append(
            OracleSegment(
                parent_label=paths[start][0],
                node_labels=tuple(paths[b][1] for b in inner[:-1]),
                span=(start, end),
            )
        )
    entity_segments = (
        OracleSegment(
            parent_label="root",
            node_labels=tuple(paths[b][0] for b in entity_bounds[:-1]),
            span=(0, n),
        ),
    )
    return OracleDecomposition(
        status_segments=status_segments,
        action_segments=tuple(action_segments),
        entity_segments=entity_segments,
    )


def as_oracle_view(decomposition) -> OracleDecomposition:
    """Project an engine Decomposition onto the oracle's comparison shape."""

    def _view(segments):
        return tuple(
            OracleSegment(
                parent_label=s.parent_path[-1], node_labels=s.node_labels, span=s.span
            )
            for s in segments
        )

    return OracleDecomposition(
        status_segments=_view(decomposition.status_segments),
        action_segments=_view(decomposition.action_segments),
        entity_segments=_view(decomposition.entity_segments),
    )


def confusion_metrics(actual: list[str], predicted: list[str]):
    """(precision, recall, f1, tp, fp, fn, tn) with None for undefined ratios."""
    assert len(actual) == len(predicted)
    tp = fp = fn = tn = 0
    for a, p in zip(actual, predicted):
        if p == "Anomaly" and a == "Anomaly":
            tp += 1
        elif p == "Anomaly":
            fp += 1
        elif a == "Anomaly":
            fn += 1
        else:
            tn += 1
    precision = tp / (tp + fp) if (tp + fp) else None
    recall = tp / (tp + fn) if (tp + fn) else None
    if precision is None or recall is None or (precision + recall) == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return precision, recall, f1, tp, fp, fn, tn
