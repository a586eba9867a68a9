from collections import Counter

import pytest

from amrmerge.bundle import bundle_from_dict, bundle_to_dict
from amrmerge.merge import merge
from amrmerge.selection.labels import as_vector, gold_labels, noisy_labels, propagate_labels
from amrmerge.synthetic import BACKGROUND_EVENTS, BACKGROUND_OBJECTS, FILLER, SyntheticCorpus


def test_seeded_determinism():
    a = SyntheticCorpus(seed=11).corpus(5)
    b = SyntheticCorpus(seed=11).corpus(5)
    assert [bundle_to_dict(x) for x in a] == [bundle_to_dict(x) for x in b]
    c = SyntheticCorpus(seed=12).corpus(5)
    assert [bundle_to_dict(x) for x in a] != [bundle_to_dict(x) for x in c]


@pytest.mark.parametrize("gold", ["identity", "label"])
def test_bundles_validate_and_round_trip(gold):
    for bundle in SyntheticCorpus(seed=0, gold=gold, reentrancy=0.5).corpus(20):
        again = bundle_from_dict(bundle_to_dict(bundle))
        assert bundle_to_dict(again) == bundle_to_dict(bundle)
        assert bundle.summary and len(bundle.document) >= 3


def test_label_gold_equals_noisy_labels_unmerged():
    for bundle in SyntheticCorpus(seed=4, gold="label").corpus(15):
        partition, graph = merge(bundle, "unmerged")
        nodes = bundle.document_nodes()
        noisy = propagate_labels(partition, noisy_labels(graph, bundle.summary_graphs))
        assert as_vector(noisy, nodes) == as_vector(gold_labels(bundle), nodes)


def test_background_vocabulary_stays_out_of_summaries():
    background = {c for c, _ in BACKGROUND_EVENTS + BACKGROUND_OBJECTS} | {c for pair, *_ in FILLER for c in pair}
    for bundle in SyntheticCorpus(seed=6).corpus(20):
        summary = {n.concept for g in bundle.summary_graphs for n in g.nodes}
        assert not summary & background


def test_coref_clusters_merge_people_across_sentences():
    merged = 0
    for bundle in SyntheticCorpus(seed=2).corpus(20):
        for cluster in bundle.coref.clusters:
            assert len(cluster) >= 2
        partition, _ = merge(bundle, "person", bundle.coref)
        merged += sum(1 for c in partition.clusters if len({m.sentence_index for m in c}) > 1)
    assert merged > 0


def test_reentrancy_knob():
    def reentrant(corpus):
        count = 0
        for bundle in corpus:
            for g in bundle.graphs:
                indegree = Counter(e.target for e in g.edges)
                count += sum(1 for v in indegree.values() if v > 1)
        return count

    assert reentrant(SyntheticCorpus(seed=1, reentrancy=0.0).corpus(15)) == 0
    assert reentrant(SyntheticCorpus(seed=1, reentrancy=1.0).corpus(15)) > 0


def test_identity_gold_aligns_role_people():
    bundle = SyntheticCorpus(seed=0).bundle("x")
    gold = gold_labels(bundle)
    assert any(gold.values()) and not all(gold.values())


def test_bad_gold_mode():
    with pytest.raises(ValueError):
        SyntheticCorpus(gold="other")
