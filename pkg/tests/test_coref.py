import pytest

from amrmerge.amr import NodeId
from amrmerge.coref import CorefClusters, Mention, assign_subgraph_clusters, heuristic_coref, load_coref
from amrmerge.merge import person_roots
from conftest import fixture_bundle


def test_load_one_cluster():
    c = load_coref([[[0, 1, 2], [2, 1, 2]]])
    assert c.clusters == ((Mention(0, 1, 2), Mention(2, 1, 2)),)


def test_load_empty():
    assert len(load_coref({"clusters": []})) == 0


def test_span_in_two_clusters_rejected():
    with pytest.raises(ValueError):
        load_coref([[[0, 1, 2]], [[0, 1, 2], [1, 0, 1]]])


def test_malformed_mention():
    with pytest.raises(ValueError):
        load_coref([[[0, 1]]])


def test_fixture_cluster(minister):
    assert minister.coref.clusters == ((Mention(0, 0, 4), Mention(1, 2, 6)),)


def test_heuristic_links_repeated_name():
    b = fixture_bundle("err_name_skip")
    clusters = heuristic_coref(b).clusters
    assert (Mention(0, 4, 6), Mention(1, 0, 2)) in clusters
    tokens = {" ".join(b.document[m.sentence].tokens[m.start:m.end]).lower() for c in clusters for m in c}
    assert "katrin pargmae" in tokens


def test_heuristic_ignores_single_tokens(minister):
    # every repeated span in the minister fixture is a single token
    assert len(heuristic_coref(minister)) == 0


def test_heuristic_three_mentions():
    from amrmerge.bundle import bundle_from_dict

    penman = '(s / speak-01 :ARG0 (p / person :name (n / name :op1 "Katrin" :op2 "Pargmae")))'
    sentence = {"text": "Katrin Pargmae spoke", "penman": penman}
    b = bundle_from_dict({
        "doc_id": "three",
        "summary": [sentence],
        "document": [sentence] * 3,
        "alignments": [{"sent": s, "node": n, "span": [0, 2]} for s in range(3) for n in (1, 2)],
    })
    assert heuristic_coref(b).clusters == ((Mention(0, 0, 2), Mention(1, 0, 2), Mention(2, 0, 2)),)


def test_assignment_on_fixture(minister):
    roots = person_roots(minister)
    a = assign_subgraph_clusters(minister, roots, minister.coref)
    assert roots == [NodeId(0, 1), NodeId(0, 7), NodeId(1, 1), NodeId(2, 1)]
    assert a.coreferent(NodeId(0, 1), NodeId(1, 1))
    assert not a.coreferent(NodeId(0, 1), NodeId(0, 7))
    assert len({a.ids[r] for r in roots}) == 3
    # fresh ids start above the coref range
    assert a.ids[NodeId(0, 7)] >= len(minister.coref)


def test_empty_coref_gives_fresh_ids(minister):
    roots = person_roots(minister)
    a = assign_subgraph_clusters(minister, roots, CorefClusters())
    assert len(set(a.ids.values())) == len(roots)


def test_containment_rule():
    m = Mention(0, 2, 5)
    assert m.contains(0, 3, 4) and m.contains(0, 2, 5)
    assert not m.contains(0, 1, 4) and not m.contains(1, 3, 4)


def test_unaligned_root_gets_diagnostic(minister):
    from dataclasses import replace

    stripped = replace(minister, alignments=tuple(a for a in minister.alignments if a.node != NodeId(1, 1)))
    a = assign_subgraph_clusters(stripped, person_roots(stripped), minister.coref)
    assert not a.coreferent(NodeId(0, 1), NodeId(1, 1))
    assert any("1.1" in d for d in a.diagnostics)


def test_assignment_deterministic(minister):
    roots = person_roots(minister)
    assert assign_subgraph_clusters(minister, roots, minister.coref) == assign_subgraph_clusters(minister, roots, minister.coref)
