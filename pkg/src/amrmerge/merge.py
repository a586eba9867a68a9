"""Sentence-graph merging: partitions of sentence nodes and the document graphs they induce."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, NamedTuple

from scipy.cluster.hierarchy import DisjointSet

from .amr import AmrGraph, Node, NodeId
from .bundle import AlignmentAnnotation, DocumentBundle
from .coref import CorefClusters, assign_subgraph_clusters

COLLAPSIBLE = ("name", "date-entity")
ARTIFICIAL_ROOT = -1


@dataclass(frozen=True)
class MergePartition:
    """Disjoint clusters of sentence nodes, kept in canonical order.

    Members are sorted inside each cluster and clusters are ordered by their
    smallest member, so equal partitions compare and serialize identically.
    """

    clusters: tuple[tuple[NodeId, ...], ...]
    strategy: str = ""

    @classmethod
    def from_clusters(cls, clusters: Iterable[Iterable[NodeId]], strategy: str = "") -> "MergePartition":
        normalized = [tuple(sorted(NodeId(*n) for n in c)) for c in clusters]
        normalized = [c for c in normalized if c]
        normalized.sort()
        seen: set[NodeId] = set()
        for c in normalized:
            for n in c:
                if n in seen:
                    raise ValueError(f"node {n} appears in more than one cluster")
                seen.add(n)
        return cls(tuple(normalized), strategy)

    @classmethod
    def singletons(cls, nodes: Iterable[NodeId], strategy: str = "") -> "MergePartition":
        return cls.from_clusters(([n] for n in nodes), strategy)

    def __len__(self) -> int:
        return len(self.clusters)

    @property
    def nodes(self) -> list[NodeId]:
        return sorted(n for c in self.clusters for n in c)

    def cluster_index(self) -> dict[NodeId, int]:
        return {n: i for i, c in enumerate(self.clusters) for n in c}

    def covers(self, universe: Iterable[NodeId]) -> bool:
        return sorted(universe) == self.nodes

    def restrict(self, keep: Iterable[NodeId]) -> "MergePartition":
        keep = set(keep)
        return MergePartition.from_clusters(
            ([n for n in c if n in keep] for c in self.clusters), self.strategy
        )

    def to_json(self) -> dict:
        return {"clusters": [[list(n) for n in c] for c in self.clusters], "strategy": self.strategy}

    @classmethod
    def from_json(cls, data: Mapping) -> "MergePartition":
        return cls.from_clusters(data["clusters"], data.get("strategy", ""))


class DocEdge(NamedTuple):
    source: int
    target: int
    role: str


@dataclass(frozen=True)
class DocumentGraph:
    """Merged graph: one node per partition cluster plus an artificial root.

    ``members`` records which sentence nodes each document node came from.
    The artificial root is implicit; it points at ``sentence_roots[i]`` for
    sentence ``i`` (several sentences may share a merged root).
    """

    labels: tuple[str, ...]
    members: tuple[tuple[NodeId, ...], ...]
    edges: tuple[DocEdge, ...]
    sentence_roots: tuple[int, ...]
    constants: tuple[tuple[int, str, str, bool], ...] = ()
    strategy: str = ""
    _children: dict = field(default=None, init=False, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.labels)

    def children(self, node: int) -> list[DocEdge]:
        if self._children is None:
            table: dict[int, list[DocEdge]] = defaultdict(list)
            for e in self.edges:
                table[e.source].append(e)
            object.__setattr__(self, "_children", table)
        return self._children.get(node, [])

    def root_edges(self) -> list[DocEdge]:
        return [DocEdge(ARTIFICIAL_ROOT, r, f":snt{i + 1}") for i, r in enumerate(self.sentence_roots)]

    def undirected_neighbors(self) -> list[set[int]]:
        """Neighbor sets ignoring direction, self-loops and artificial-root edges."""
        neighbors: list[set[int]] = [set() for _ in self.labels]
        for e in self.edges:
            if e.source != e.target:
                neighbors[e.source].add(e.target)
                neighbors[e.target].add(e.source)
        return neighbors

    def to_edge_list(self) -> str:
        lines = [f"# {len(self)} nodes, {len(self.edges)} edges, strategy={self.strategy or '-'}"]
        for i, (label, members) in enumerate(zip(self.labels, self.members)):
            prov = " ".join(str(m) for m in members)
            lines.append(f"node\t{i}\t{label}\t{prov}")
        for e in self.root_edges() + list(self.edges):
            src = "ROOT" if e.source == ARTIFICIAL_ROOT else str(e.source)
            lines.append(f"edge\t{src}\t{e.target}\t{e.role}")
        return "\n".join(lines) + "\n"

    def to_penman(self) -> str:
        from .linearize import linearize

        return linearize(self, [1] * len(self)).penman


def build_document_graph(
    partition: MergePartition,
    graphs: list[AmrGraph],
    labels: Mapping[NodeId, str] | None = None,
) -> DocumentGraph:
    """Inherit every sentence edge onto the clusters holding its endpoints.

    Node labels come from ``labels`` (defaulting to each member's concept);
    a cluster takes the label of its smallest member.
    """
    index = partition.cluster_index()
    concept = {n.id: n.concept for g in graphs for n in g.nodes}
    if labels is None:
        labels = concept
    doc_labels = tuple(labels[c[0]] for c in partition.clusters)
    edges: list[DocEdge] = []
    seen_edges = set()
    constants = []
    seen_constants = set()
    for g in graphs:
        for e in g.edges:
            de = DocEdge(index[e.source], index[e.target], e.role)
            if de not in seen_edges:
                seen_edges.add(de)
                edges.append(de)
        for c in g.constants:
            dc = (index[c.parent], c.role, c.value, c.quoted)
            if dc not in seen_constants:
                seen_constants.add(dc)
                constants.append(dc)
    roots = tuple(index[g.root] for g in graphs)
    return DocumentGraph(doc_labels, partition.clusters, tuple(edges), roots, tuple(constants), partition.strategy)


# --- strategies --------------------------------------------------------------


def unmerged_join(bundle: DocumentBundle) -> tuple[MergePartition, DocumentGraph]:
    partition = MergePartition.singletons(bundle.document_nodes(), "unmerged")
    return partition, build_document_graph(partition, bundle.graphs)


@dataclass(frozen=True)
class CollapseResult:
    graphs: list[AmrGraph]
    labels: dict[NodeId, str]
    absorbed: dict[NodeId, NodeId]
    log: list[tuple[NodeId, NodeId, str]]


def collapse_names_dates(graphs: list[AmrGraph]) -> CollapseResult:
    """Fold only-child ``name``/``date-entity`` nodes into their parents.

    The parent is relabeled ``<parent>_<literal tokens>`` (lowercased, in
    attribute order).  Only instance-node children count toward "only
    child"; literal attributes such as ``:wiki`` do not.  ``labels`` gives
    the post-collapse label of every original node, absorbed nodes taking
    their parent's new label so they land in the parent's cluster.
    """
    out_graphs = []
    labels: dict[NodeId, str] = {}
    absorbed: dict[NodeId, NodeId] = {}
    log = []
    for g in graphs:
        relabel: dict[NodeId, str] = {}
        removed: set[NodeId] = set()
        for node in g.nodes:
            if node.concept not in COLLAPSIBLE:
                continue
            parents = g.parents(node.id)
            if len(parents) != 1 or g.children(node.id):
                continue
            parent = parents[0].source
            if len(g.children(parent)) != 1 or parent in removed:
                continue
            tokens = [t.lower() for c in g.constants_of(node.id) for t in c.value.split()]
            if not tokens:
                continue
            new_label = "_".join([g.concept(parent)] + tokens)
            relabel[parent] = new_label
            removed.add(node.id)
            absorbed[node.id] = parent
            log.append((parent, node.id, new_label))
        for node in g.nodes:
            if node.id in removed:
                continue
            labels[node.id] = relabel.get(node.id, node.concept)
        for child, parent in absorbed.items():
            if child.sentence_index == g.sentence_index:
                labels[child] = labels[parent]
        out_graphs.append(
            AmrGraph(
                tuple(Node(n.id, relabel.get(n.id, n.concept), n.variable) for n in g.nodes if n.id not in removed),
                tuple(e for e in g.edges if e.source not in removed and e.target not in removed),
                g.root,
                tuple(c for c in g.constants if c.parent not in removed),
            )
        )
    return CollapseResult(out_graphs, labels, absorbed, log)


def _label_partition(nodes: Iterable[NodeId], labels: Mapping[NodeId, str]) -> list[list[NodeId]]:
    groups: dict[str, list[NodeId]] = {}
    for n in nodes:
        groups.setdefault(labels[n], []).append(n)
    return list(groups.values())


def concept_merge(bundle: DocumentBundle, collapse: bool = True) -> tuple[MergePartition, DocumentGraph]:
    """One document node per distinct (post-collapse) concept label."""
    if collapse:
        labels = collapse_names_dates(bundle.graphs).labels
    else:
        labels = {n: bundle.concept(n) for n in bundle.document_nodes()}
    name = "concept" if collapse else "concept-nocollapse"
    partition = MergePartition.from_clusters(_label_partition(bundle.document_nodes(), labels), name)
    return partition, build_document_graph(partition, bundle.graphs, labels)


def person_roots(bundle: DocumentBundle) -> list[NodeId]:
    return [n for n in bundle.document_nodes() if bundle.concept(n) == "person"]


def person_subgraphs(bundle: DocumentBundle) -> dict[NodeId, list[NodeId]]:
    """Descendant subgraph (root included) of every person node.

    A node reachable from several person roots belongs only to the earliest
    root in (sentence, node) order, so the subgraphs are disjoint; a nested
    person root still heads its own subgraph.
    """
    roots = person_roots(bundle)
    owner: dict[NodeId, NodeId] = {r: r for r in roots}
    for root in roots:
        graph = bundle.document[root.sentence_index].graph
        for n in sorted(graph.descendants(root)):
            owner.setdefault(n, root)
    subgraphs: dict[NodeId, list[NodeId]] = {r: [] for r in roots}
    for n, root in sorted(owner.items()):
        subgraphs[root].append(n)
    return subgraphs


def _person_clusters(bundle: DocumentBundle, coref: CorefClusters) -> list[list[NodeId]]:
    subgraphs = person_subgraphs(bundle)
    assignment = assign_subgraph_clusters(bundle, list(subgraphs), coref)
    groups: dict[int, list[NodeId]] = defaultdict(list)
    for root in subgraphs:
        groups[assignment.ids[root]].append(root)
    labels = {n: bundle.concept(n) for n in bundle.document_nodes()}
    clusters = []
    for cid in sorted(groups):
        roots = groups[cid]
        if len(roots) < 2:
            continue
        pooled = [n for r in roots for n in subgraphs[r]]
        clusters.extend(_label_partition(pooled, labels))
    return clusters


def person_merge(bundle: DocumentBundle, coref: CorefClusters | None) -> tuple[MergePartition, DocumentGraph]:
    """Merge same-label nodes across co-referent person subgraphs only."""
    clusters = _person_clusters(bundle, coref or CorefClusters())
    covered = {n for c in clusters for n in c}
    clusters += [[n] for n in bundle.document_nodes() if n not in covered]
    partition = MergePartition.from_clusters(clusters, "person")
    return partition, build_document_graph(partition, bundle.graphs)


def combined_merge(bundle: DocumentBundle, coref: CorefClusters | None) -> tuple[MergePartition, DocumentGraph]:
    """Person merging, then raw-label merging of every node it left untouched.

    Nodes of co-referent person groups stay with their person-phase clusters
    even when those are singletons; no name/date collapse is applied.
    """
    clusters = _person_clusters(bundle, coref or CorefClusters())
    covered = {n for c in clusters for n in c}
    labels = {n: bundle.concept(n) for n in bundle.document_nodes()}
    rest = [n for n in bundle.document_nodes() if n not in covered]
    clusters += _label_partition(rest, labels)
    partition = MergePartition.from_clusters(clusters, "combined")
    return partition, build_document_graph(partition, bundle.graphs)


STRATEGIES: dict[str, Callable[..., tuple[MergePartition, DocumentGraph]]] = {
    "unmerged": lambda bundle, coref=None: unmerged_join(bundle),
    "concept": lambda bundle, coref=None: concept_merge(bundle),
    "person": person_merge,
    "combined": combined_merge,
}
NEEDS_COREF = frozenset({"person", "combined"})


def merge(bundle: DocumentBundle, strategy: str, coref: CorefClusters | None = None) -> tuple[MergePartition, DocumentGraph]:
    try:
        fn = STRATEGIES[strategy]
    except KeyError:
        raise ValueError(f"unknown merge strategy {strategy!r}") from None
    return fn(bundle, coref)


def induce_gold_clusters(annotation: AlignmentAnnotation, bundle: DocumentBundle) -> MergePartition:
    """Document nodes sharing a summary target, closed transitively."""
    nodes = bundle.document_nodes()
    sets = DisjointSet(nodes)
    by_handle: dict[NodeId, NodeId] = {}
    for node in nodes:
        for handle in sorted(annotation.handles(node)):
            first = by_handle.setdefault(handle, node)
            sets.merge(first, node)
    return MergePartition.from_clusters(sets.subsets(), "gold")


def merge_proportion(partition: MergePartition) -> float:
    total = sum(len(c) for c in partition.clusters)
    if total == 0:
        return 0.0
    return sum(len(c) for c in partition.clusters if len(c) >= 2) / total
