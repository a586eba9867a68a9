"""Glue between merging, selection and evaluation, shared by the CLI and tests."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bundle import BundleError, DocumentBundle
from .coref import CorefClusters, heuristic_coref
from .evaluate import Stats, score_selection_stats, selection_stats, sum_stats, SelectionScore
from .merge import NEEDS_COREF, STRATEGIES, DocumentGraph, MergePartition, merge
from .selection.features import EmbeddingTable, extract_features
from .selection.gat import GatModel
from .selection.labels import as_vector, gold_labels, noisy_labels, propagate_labels
from .selection.train import LabeledGraph, TrainConfig, TrainResult, gat_train, predict

COREF_SOURCES = ("file", "heuristic", "none")


class ConfigurationError(ValueError):
    """An invalid strategy/coreference choice."""


def resolve_coref(bundle: DocumentBundle, source: str) -> CorefClusters | None:
    if source == "file":
        if bundle.coref is None:
            raise BundleError(f"{bundle.doc_id}: --coref file requested but the bundle has no coref clusters")
        return bundle.coref
    if source == "heuristic":
        return heuristic_coref(bundle)
    if source == "none":
        return None
    raise ConfigurationError(f"unknown coref source {source!r}")


def check_strategy(strategy: str, coref_source: str) -> None:
    if strategy not in STRATEGIES:
        raise ConfigurationError(f"unknown strategy {strategy!r}; choose from {', '.join(STRATEGIES)}")
    if strategy in NEEDS_COREF and coref_source == "none":
        raise ConfigurationError(f"strategy {strategy!r} needs coreference; use --coref file or heuristic")


@dataclass
class PreparedDocument:
    bundle: DocumentBundle
    partition: MergePartition
    graph: DocumentGraph
    item: LabeledGraph


def prepare(bundle: DocumentBundle, strategy: str, coref_source: str, embeddings: EmbeddingTable) -> PreparedDocument:
    coref = resolve_coref(bundle, coref_source) if strategy in NEEDS_COREF else None
    partition, graph = merge(bundle, strategy, coref)
    features = extract_features(graph, embeddings)
    labels = noisy_labels(graph, bundle.summary_graphs)
    return PreparedDocument(bundle, partition, graph, LabeledGraph(graph, features, labels, doc_id=bundle.doc_id))


def prepare_all(bundles: Sequence[DocumentBundle], strategy: str, coref_source: str, embeddings: EmbeddingTable) -> list[PreparedDocument]:
    return [prepare(b, strategy, coref_source, embeddings) for b in bundles]


def train_selector(train: Sequence[PreparedDocument], dev: Sequence[PreparedDocument], config: TrainConfig) -> TrainResult:
    return gat_train([d.item for d in train], [d.item for d in dev], config)


def node_predictions(model: GatModel, doc: PreparedDocument, threshold: float = 0.5) -> dict:
    """Predicted label of every sentence node, propagated from its cluster."""
    if doc.item.features.shape[1] != model.d_in:
        raise ValueError(f"{doc.bundle.doc_id}: features have dimension {doc.item.features.shape[1]}, model expects {model.d_in}")
    return propagate_labels(doc.partition, predict(model, doc.item, threshold))


def selection_document_stats(model: GatModel, docs: Sequence[PreparedDocument], threshold: float = 0.5,
                             include_abstractive: bool = True) -> list[Stats]:
    out = []
    for doc in docs:
        nodes = doc.bundle.document_nodes()
        gold = gold_labels(doc.bundle, include_abstractive)
        pred = node_predictions(model, doc, threshold)
        out.append(selection_stats(as_vector(pred, nodes), as_vector(gold, nodes)))
    return out


def selection_score(model: GatModel, docs: Sequence[PreparedDocument], threshold: float = 0.5,
                    include_abstractive: bool = True) -> SelectionScore:
    return score_selection_stats(sum_stats(selection_document_stats(model, docs, threshold, include_abstractive)))


@dataclass
class MultiRunResult:
    runs: list[SelectionScore]
    # per run, per document confusion counts; used for significance testing
    document_stats: list[list[Stats]]
    models: list[GatModel]

    @property
    def mean(self) -> tuple[float, float, float]:
        arr = np.array([[r.precision, r.recall, r.f1] for r in self.runs])
        return tuple(float(x) for x in arr.mean(axis=0))


def run_selection(
    train: Sequence[PreparedDocument],
    dev: Sequence[PreparedDocument],
    test: Sequence[PreparedDocument],
    config: TrainConfig,
    runs: int = 5,
    include_abstractive: bool = True,
) -> MultiRunResult:
    """Train ``runs`` classifiers (seeds ``config.seed + k``) and score each on ``test``."""
    if runs < 1:
        raise ValueError("runs must be at least 1")
    scores, stats, models = [], [], []
    for k in range(runs):
        cfg = TrainConfig(**{**config.to_dict(), "seed": config.seed + k})
        model = train_selector(train, dev, cfg).model
        doc_stats = selection_document_stats(model, test, cfg.threshold, include_abstractive)
        scores.append(score_selection_stats(sum_stats(doc_stats)))
        stats.append(doc_stats)
        models.append(model)
    return MultiRunResult(scores, stats, models)
