"""Text coreference clusters and their projection onto person subgraphs."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, NamedTuple

from .amr import NodeId

if TYPE_CHECKING:
    from .bundle import DocumentBundle


class Mention(NamedTuple):
    sentence: int
    start: int
    end: int

    def contains(self, sentence: int, start: int, end: int) -> bool:
        return self.sentence == sentence and self.start <= start and end <= self.end


@dataclass(frozen=True)
class CorefClusters:
    clusters: tuple[tuple[Mention, ...], ...] = ()

    def __post_init__(self) -> None:
        owner: dict[Mention, int] = {}
        for cid, cluster in enumerate(self.clusters):
            for m in cluster:
                if m.start >= m.end or m.start < 0:
                    raise ValueError(f"empty or negative mention span {tuple(m)}")
                if owner.setdefault(m, cid) != cid:
                    raise ValueError(f"mention {tuple(m)} appears in clusters {owner[m]} and {cid}")

    def __len__(self) -> int:
        return len(self.clusters)

    def mentions(self) -> Iterable[Mention]:
        for cluster in self.clusters:
            yield from cluster

    def to_json(self) -> dict:
        return {"clusters": [[list(m) for m in cluster] for cluster in self.clusters]}


def load_coref(data) -> CorefClusters:
    """Build clusters from ``{"clusters": [[[sent, start, end], ...], ...]}``.

    A bare list of clusters is accepted too.  Repeats inside one cluster are
    dropped; a span listed under two clusters is an error.
    """
    raw = data.get("clusters", []) if isinstance(data, dict) else data
    if not isinstance(raw, list):
        raise ValueError("coref clusters must be a list")
    clusters = []
    for cluster in raw:
        mentions = []
        for triple in cluster:
            if len(triple) != 3:
                raise ValueError(f"mention {triple!r} is not a [sent, start, end] triple")
            m = Mention(*(int(x) for x in triple))
            if m not in mentions:
                mentions.append(m)
        if mentions:
            clusters.append(tuple(mentions))
    return CorefClusters(tuple(clusters))


def heuristic_coref(bundle: DocumentBundle) -> CorefClusters:
    """Cluster aligned spans of two or more tokens with identical lowercased text."""
    groups: dict[str, list[Mention]] = defaultdict(list)
    seen = set()
    for a in sorted(bundle.alignments, key=lambda a: (a.node.sentence_index, a.start, a.end)):
        m = Mention(a.node.sentence_index, a.start, a.end)
        if m.end - m.start < 2 or m in seen:
            continue
        seen.add(m)
        tokens = bundle.document[m.sentence].tokens[m.start:m.end]
        groups[" ".join(tokens).lower()].append(m)
    clusters = [tuple(ms) for ms in groups.values() if len(ms) >= 2]
    clusters.sort(key=lambda c: c[0])
    return CorefClusters(tuple(clusters))


@dataclass(frozen=True)
class SubgraphClusterAssignment:
    ids: dict[NodeId, int]
    diagnostics: list[str] = field(default_factory=list)

    def coreferent(self, a: NodeId, b: NodeId) -> bool:
        return self.ids[a] == self.ids[b]


def _best_mention(coref: CorefClusters, sentence: int, start: int, end: int) -> int | None:
    best = None
    for cid, cluster in enumerate(coref.clusters):
        for m in cluster:
            if m.contains(sentence, start, end):
                key = (-(m.end - m.start), m.start, cid)
                if best is None or key < best[0]:
                    best = (key, cid)
    return None if best is None else best[1]


def assign_subgraph_clusters(
    bundle: DocumentBundle, person_roots: list[NodeId], coref: CorefClusters
) -> SubgraphClusterAssignment:
    """Give each person subgraph a coreference cluster id.

    Every node of the root's descendant subgraph is consulted, in order of its
    first aligned token; the first aligned span lying inside a mention decides,
    preferring the longest enclosing mention when mentions nest.  Subgraphs
    with no hit, or whose root carries no alignment, get a fresh id above the
    coreference cluster range.
    """
    fresh = len(coref)
    ids: dict[NodeId, int] = {}
    diagnostics = []
    for root in sorted(person_roots):
        graph = bundle.document[root.sentence_index].graph
        cluster = None
        if not bundle.spans(root):
            diagnostics.append(f"person node {root} has no token alignment")
        else:
            aligned = [
                (span, nid)
                for nid in graph.descendants(root)
                for span in bundle.spans(nid)
            ]
            aligned.sort()
            for (start, end), _ in aligned:
                cluster = _best_mention(coref, root.sentence_index, start, end)
                if cluster is not None:
                    break
        if cluster is None:
            cluster = fresh
            fresh += 1
        ids[root] = cluster
    return SubgraphClusterAssignment(ids, diagnostics)
