"""Training labels, gold labels and projection of predictions onto sentence nodes."""

from __future__ import annotations

from typing import Mapping, Sequence

from ..amr import AmrGraph, NodeId
from ..bundle import DocumentBundle
from ..merge import DocumentGraph, MergePartition


def noisy_labels(graph: DocumentGraph, summary_graphs: Sequence[AmrGraph]) -> list[int]:
    """1 for document nodes whose label equals some summary concept."""
    summary_concepts = {n.concept for g in summary_graphs for n in g.nodes}
    return [int(label in summary_concepts) for label in graph.labels]


def gold_labels(bundle: DocumentBundle, include_abstractive: bool = True) -> dict[NodeId, int]:
    """1 for every document node with at least one annotated summary alignment."""
    if bundle.gold is None:
        raise ValueError(f"{bundle.doc_id}: no gold annotations")
    out = {}
    for node in bundle.document_nodes():
        entry = bundle.gold.entries.get(node)
        aligned = entry is not None and bool(entry.handles)
        if aligned and entry.abstractive and not include_abstractive:
            aligned = False
        out[node] = int(aligned)
    return out


def propagate_labels(partition: MergePartition, predicted: Sequence[int]) -> dict[NodeId, int]:
    if len(predicted) != len(partition):
        raise ValueError(f"expected {len(partition)} predictions, got {len(predicted)}")
    return {n: int(label) for cluster, label in zip(partition.clusters, predicted) for n in cluster}


def as_vector(labels: Mapping[NodeId, int], nodes: Sequence[NodeId]) -> list[int]:
    return [labels[n] for n in nodes]
