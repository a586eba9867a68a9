"""Scoring: cluster metrics, node selection, annotator agreement and significance."""

from __future__ import annotations

from collections import Counter
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .amr import NodeId
from .bundle import AlignmentAnnotation
from .merge import MergePartition

UNIVERSES = ("full", "key-linked")


def f_measure(precision: float, recall: float) -> float:
    if precision + recall <= 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


class ClusterScore(NamedTuple):
    precision: float
    recall: float
    f1: float


class Stats(NamedTuple):
    """Additive sufficient statistics: precision and recall as ratios of sums.

    Summing over documents and then dividing gives a micro-averaged score,
    which is what the randomization test shuffles.
    """

    p_num: float
    p_den: float
    r_num: float
    r_den: float

    def __add__(self, other):  # type: ignore[override]
        return Stats(*(a + b for a, b in zip(self, other)))

    def score(self) -> ClusterScore:
        p = self.p_num / self.p_den if self.p_den else 1.0
        r = self.r_num / self.r_den if self.r_den else 1.0
        return ClusterScore(p, r, f_measure(p, r))


def sum_stats(items: Sequence[Stats]) -> Stats:
    total = Stats(0.0, 0.0, 0.0, 0.0)
    for s in items:
        total = total + s
    return total


# --- cluster metrics ---------------------------------------------------------


def evaluation_universe(response: MergePartition, key: MergePartition, universe: str = "full") -> list[NodeId]:
    """Nodes a cluster metric is computed over.

    ``key-linked`` keeps nodes in non-singleton key clusters plus every node
    the response clusters together with one of them; unaligned key
    singletons the response leaves alone drop out.
    """
    if response.nodes != key.nodes:
        raise ValueError("response and key partitions cover different nodes")
    if universe == "full":
        return key.nodes
    if universe != "key-linked":
        raise ValueError(f"unknown universe {universe!r}; expected one of {UNIVERSES}")
    linked = {n for c in key.clusters if len(c) > 1 for n in c}
    keep = set(linked)
    for c in response.clusters:
        if linked.intersection(c):
            keep.update(c)
    return sorted(keep)


def _restricted(response: MergePartition, key: MergePartition, universe: str):
    nodes = evaluation_universe(response, key, universe)
    if universe != "full":
        response, key = response.restrict(nodes), key.restrict(nodes)
    return response, key


def _overlaps(response: MergePartition, key: MergePartition) -> Counter:
    k_index = key.cluster_index()
    counts: Counter = Counter()
    for ri, c in enumerate(response.clusters):
        for n in c:
            counts[ri, k_index[n]] += 1
    return counts


def b_cubed_stats(response: MergePartition, key: MergePartition, universe: str = "full") -> Stats:
    response, key = _restricted(response, key, universe)
    n = float(len(key.nodes))
    p_num = r_num = 0.0
    for (ri, ki), c in _overlaps(response, key).items():
        p_num += c * c / len(response.clusters[ri])
        r_num += c * c / len(key.clusters[ki])
    return Stats(p_num, n, r_num, n)


def b_cubed(response: MergePartition, key: MergePartition, universe: str = "full") -> ClusterScore:
    """Per-node overlap precision/recall, averaged uniformly over nodes."""
    return b_cubed_stats(response, key, universe).score()


def _links(size: int) -> int:
    return size * (size - 1) // 2


def _lea_side(entities: MergePartition, other: MergePartition, overlaps: dict) -> float:
    # Singletons carry one self-link, resolved only if the other side also
    # leaves that node alone.
    other_index = other.cluster_index()
    total = 0.0
    for ei, e in enumerate(entities.clusters):
        if len(e) == 1:
            total += 1.0 if len(other.clusters[other_index[e[0]]]) == 1 else 0.0
        else:
            resolved = sum(_links(c) for c in overlaps.get(ei, ()))
            total += resolved / _links(len(e))
    return total


def lea_stats(response: MergePartition, key: MergePartition, universe: str = "full") -> Stats:
    response, key = _restricted(response, key, universe)
    by_key: dict[int, list[int]] = {}
    by_resp: dict[int, list[int]] = {}
    for (ri, ki), c in _overlaps(response, key).items():
        by_key.setdefault(ki, []).append(c)
        by_resp.setdefault(ri, []).append(c)
    return Stats(
        _lea_side(response, key, by_resp),
        float(len(response.clusters)),
        _lea_side(key, response, by_key),
        float(len(key.clusters)),
    )


def lea(response: MergePartition, key: MergePartition, universe: str = "full") -> ClusterScore:
    """Link-based entity-aware score with uniform entity importance."""
    return lea_stats(response, key, universe).score()


CLUSTER_METRICS = {"b3": b_cubed_stats, "lea": lea_stats}


# --- node selection ----------------------------------------------------------


class SelectionScore(NamedTuple):
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int


def selection_stats(predicted: Sequence[int], gold: Sequence[int]) -> Stats:
    predicted = np.asarray(predicted, dtype=int)
    gold = np.asarray(gold, dtype=int)
    if predicted.shape != gold.shape:
        raise ValueError(f"label vectors differ in length: {predicted.shape} vs {gold.shape}")
    tp = float(np.sum((predicted == 1) & (gold == 1)))
    return Stats(tp, float(np.sum(predicted == 1)), tp, float(np.sum(gold == 1)))


def score_selection_stats(stats: Stats) -> SelectionScore:
    tp, pred_pos, _, gold_pos = stats
    p = tp / pred_pos if pred_pos else 0.0
    r = tp / gold_pos if gold_pos else 0.0
    return SelectionScore(p, r, f_measure(p, r), int(tp), int(pred_pos - tp), int(gold_pos - tp))


def selection_scores(predicted: Sequence[int], gold: Sequence[int]) -> SelectionScore:
    """Binary precision/recall/F1 for the positive class.

    An empty prediction or empty gold set scores 0 on the undefined side.
    """
    return score_selection_stats(selection_stats(predicted, gold))


# --- agreement ---------------------------------------------------------------


def _agreement_pairs(a1: AlignmentAnnotation, a2: AlignmentAnnotation):
    nodes = sorted(set(a1.entries) | set(a2.entries))
    for n in nodes:
        h1, h2 = a1.handles(n), a2.handles(n)
        if h1 or h2:
            yield h1, h2


def agreement_exact(a1: AlignmentAnnotation, a2: AlignmentAnnotation) -> float:
    pairs = list(_agreement_pairs(a1, a2))
    if not pairs:
        return 1.0
    return sum(h1 == h2 for h1, h2 in pairs) / len(pairs)


def agreement_jaccard(a1: AlignmentAnnotation, a2: AlignmentAnnotation) -> float:
    pairs = list(_agreement_pairs(a1, a2))
    if not pairs:
        return 1.0
    return sum(len(h1 & h2) / len(h1 | h2) for h1, h2 in pairs) / len(pairs)


# --- approximate randomization -----------------------------------------------


class RandomizationResult(NamedTuple):
    p_value: float
    observed: float
    rounds: int


def _swap_masks(n_docs: int, rounds: int, seed: int) -> np.ndarray:
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    rng = np.random.default_rng(seed)
    return rng.random((rounds, n_docs)) < 0.5


def p_value_from_deltas(shuffled: np.ndarray, observed: float) -> float:
    """Add-one estimate of P(|shuffled delta| >= |observed|)."""
    shuffled = np.abs(np.asarray(shuffled, dtype=float))
    # Tolerance keeps exact ties (e.g. identical systems) counted as ties.
    hits = int(np.sum(shuffled >= abs(observed) - 1e-12))
    return (hits + 1) / (len(shuffled) + 1)


def approx_randomization(
    metric: Callable[[list, list], float],
    outputs_a: Sequence,
    outputs_b: Sequence,
    gold: Sequence,
    rounds: int = 10000,
    seed: int = 0,
) -> RandomizationResult:
    """Paired test: swap the two systems' per-document outputs at random.

    ``metric(outputs, gold)`` scores a whole system over all documents.
    """
    if not (len(outputs_a) == len(outputs_b) == len(gold)):
        raise ValueError("outputs and gold must be paired per document")
    a, b, gold = list(outputs_a), list(outputs_b), list(gold)
    observed = metric(a, gold) - metric(b, gold)
    masks = _swap_masks(len(a), rounds, seed)
    deltas = np.empty(rounds)
    for i, swap in enumerate(masks):
        sa = [y if s else x for x, y, s in zip(a, b, swap)]
        sb = [x if s else y for x, y, s in zip(a, b, swap)]
        deltas[i] = metric(sa, gold) - metric(sb, gold)
    return RandomizationResult(p_value_from_deltas(deltas, observed), observed, rounds)


def _f1_rows(totals: np.ndarray, empty_precision: float) -> np.ndarray:
    p_num, p_den, r_num, r_den = totals.T
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(p_den > 0, p_num / np.where(p_den > 0, p_den, 1), empty_precision)
        r = np.where(r_den > 0, r_num / np.where(r_den > 0, r_den, 1), empty_precision)
        f = np.where(p + r > 0, 2 * p * r / np.where(p + r > 0, p + r, 1), 0.0)
    return f


def approx_randomization_stats(
    stats_a: Sequence[Stats],
    stats_b: Sequence[Stats],
    rounds: int = 10000,
    seed: int = 0,
    empty_score: float = 1.0,
) -> RandomizationResult:
    """Vectorized randomization test on the F1 of summed per-document stats.

    Uses the same swap masks as :func:`approx_randomization` for a given
    seed, so both give the same p-value on equivalent metrics.
    ``empty_score`` is precision/recall for a zero denominator (1 for
    cluster metrics, 0 for selection).
    """
    a = np.asarray(stats_a, dtype=float).reshape(-1, 4)
    b = np.asarray(stats_b, dtype=float).reshape(-1, 4)
    if a.shape != b.shape:
        raise ValueError("stats must be paired per document")
    observed = float(_f1_rows(a.sum(0, keepdims=True), empty_score)[0] - _f1_rows(b.sum(0, keepdims=True), empty_score)[0])
    masks = _swap_masks(len(a), rounds, seed).astype(float)
    diff = b - a
    tot_a = a.sum(0) + masks @ diff
    tot_b = b.sum(0) - masks @ diff
    deltas = _f1_rows(tot_a, empty_score) - _f1_rows(tot_b, empty_score)
    return RandomizationResult(p_value_from_deltas(deltas, observed), observed, rounds)
