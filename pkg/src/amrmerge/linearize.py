"""Depth-first linearization of selected document-graph nodes to PENMAN."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .amr import format_concept, quote
from .merge import DocumentGraph


@dataclass(frozen=True)
class LinearizedSelection:
    sequence: tuple[int, ...]
    penman: str
    expanded: tuple[int, ...] = ()


def _positive_closure(graph: DocumentGraph, labels: Sequence[int]) -> list[bool]:
    """Whether each node is labeled 1 or reaches a node labeled 1."""
    marked = [bool(x) for x in labels]
    changed = True
    while changed:
        changed = False
        for e in graph.edges:
            if marked[e.target] and not marked[e.source]:
                marked[e.source] = True
                changed = True
    return marked


def _variable(graph: DocumentGraph, node: int) -> str:
    letters = [ch for ch in graph.labels[node].lower() if "a" <= ch <= "z"]
    return f"{letters[0] if letters else 'x'}{node}"


def _literal(value: str, quoted: bool) -> str:
    return quote(value) if quoted else value


def linearize(
    graph: DocumentGraph,
    labels: Sequence[int],
    sentence_roots: Sequence[int] | None = None,
) -> LinearizedSelection:
    """Emit selected nodes sentence by sentence.

    From each sentence root, a node already expanded is emitted again as a
    bare reference without descending; a node labeled 1 or with a labeled-1
    descendant is emitted and expanded; anything else is skipped along with
    its subtree.  Children are visited in edge order.  Several sentence trees
    are wrapped as ``:sntN`` branches of a ``multi-sentence`` node.
    """
    if len(labels) != len(graph):
        raise ValueError(f"expected {len(graph)} labels, got {len(labels)}")
    roots = list(graph.sentence_roots if sentence_roots is None else sentence_roots)
    for r in roots:
        if r not in graph.sentence_roots:
            raise ValueError(f"node {r} is not a child of the artificial root")
    keep = _positive_closure(graph, labels)
    consts: dict[int, list[tuple[str, str, bool]]] = {}
    for node, role, value, quoted in graph.constants:
        consts.setdefault(node, []).append((role, value, quoted))

    sequence: list[int] = []
    expanded: list[int] = []
    touched: set[int] = set()

    def visit(node: int) -> str | None:
        if node in touched:
            sequence.append(node)
            return _variable(graph, node)
        if not keep[node]:
            return None
        sequence.append(node)
        expanded.append(node)
        touched.add(node)
        parts = [f"({_variable(graph, node)} / {format_concept(graph.labels[node])}"]
        for e in graph.children(node):
            rendered = visit(e.target)
            if rendered is not None:
                parts.append(f"{e.role} {rendered}")
        for role, value, quoted in consts.get(node, ()):
            parts.append(f"{role} {_literal(value, quoted)}")
        return " ".join(parts) + ")"

    trees = []
    for i, r in enumerate(roots):
        rendered = visit(r)
        if rendered is not None:
            trees.append((i, rendered))
    if not trees:
        text = ""
    elif len(trees) == 1 and trees[0][1].startswith("("):
        text = trees[0][1]
    else:
        branches = " ".join(f":snt{i + 1} {t}" for i, t in trees)
        text = f"(m / multi-sentence {branches})"
    return LinearizedSelection(tuple(sequence), text, tuple(expanded))
