import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amrmerge.amr import NodeId, parse_penman
from amrmerge.linearize import linearize
from amrmerge.merge import DocEdge, DocumentGraph, merge


def graph(labels, edges, roots, constants=()):
    return DocumentGraph(tuple(labels), tuple((NodeId(0, i),) for i in range(len(labels))),
                         tuple(DocEdge(s, t, r) for s, t, r in edges), tuple(roots), tuple(constants))


HAND = graph(
    ["say-01", "person", "meet-01", "minister", "foreign", "talk-01", "city", "friday"],
    [(0, 1, ":ARG0"), (0, 2, ":ARG1"), (2, 1, ":ARG0"), (1, 3, ":mod"), (3, 4, ":mod"),
     (5, 1, ":ARG0"), (5, 6, ":location"), (5, 7, ":time")],
    (0, 5),
)


def test_hand_trace():
    out = linearize(HAND, [0, 1, 1, 1, 0, 0, 1, 0])
    assert out.sequence == (0, 1, 3, 2, 1, 5, 1, 6)
    assert out.expanded == (0, 1, 3, 2, 5, 6)
    assert out.penman == (
        "(m / multi-sentence"
        " :snt1 (s0 / say-01 :ARG0 (p1 / person :mod (m3 / minister)) :ARG1 (m2 / meet-01 :ARG0 p1))"
        " :snt2 (t5 / talk-01 :ARG0 p1 :location (c6 / city)))"
    )
    parse_penman(out.penman)


def test_all_zero_is_empty():
    out = linearize(HAND, [0] * 8)
    assert out.sequence == () and out.penman == ""


def test_all_ones_tree_is_preorder():
    g = graph(["a", "b", "c", "d", "e"], [(0, 1, ":ARG0"), (1, 2, ":ARG1"), (0, 3, ":ARG1"), (3, 4, ":mod")], (0,))
    out = linearize(g, [1] * 5)
    assert out.sequence == (0, 1, 2, 3, 4)
    assert out.penman == "(a0 / a :ARG0 (b1 / b :ARG1 (c2 / c)) :ARG1 (d3 / d :mod (e4 / e)))"


def test_chain_keeps_connective():
    # the artificial root points at a (0), which leads to b (1)
    g = graph(["a", "b"], [(0, 1, ":ARG1")], (0,))
    out = linearize(g, [0, 1])
    assert out.sequence == (0, 1)
    assert out.penman == "(a0 / a :ARG1 (b1 / b))"


def test_label_zero_connective_promotes_with_own_role():
    g = graph(["a", "b", "c"], [(0, 1, ":ARG0"), (1, 2, ":mod")], (0,))
    assert linearize(g, [1, 0, 1]).penman == "(a0 / a :ARG0 (b1 / b :mod (c2 / c)))"


def test_constants_of_kept_nodes():
    g = graph(["name", "x"], [], (0,), constants=[(0, ":op1", "New York", True), (0, ":polarity", "-", False)])
    out = linearize(g, [1, 0])
    assert out.penman == '(n0 / name :op1 "New York" :polarity -)'


def test_cycle_is_guarded():
    g = graph(["a", "b"], [(0, 1, ":ARG0"), (1, 0, ":ARG1")], (0,))
    out = linearize(g, [1, 1])
    assert out.sequence == (0, 1, 0)
    parse_penman(out.penman)


def test_errors():
    with pytest.raises(ValueError, match="not a child"):
        linearize(HAND, [0] * 8, sentence_roots=[1])
    with pytest.raises(ValueError, match="labels"):
        linearize(HAND, [0])


def test_deterministic_on_fixture(minister):
    _, g = merge(minister, "combined", minister.coref)
    labels = [i % 2 for i in range(len(g))]
    a, b = linearize(g, labels), linearize(g, labels)
    assert a == b
    parse_penman(a.penman)


@st.composite
def labeled_graphs(draw):
    n = draw(st.integers(1, 9))
    labels = [draw(st.sampled_from(["run-01", "person", "city", "x", "dog"])) for _ in range(n)]
    edges = draw(st.lists(
        st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), st.sampled_from([":ARG0", ":ARG1", ":mod"])),
        max_size=2 * n, unique_by=lambda e: (e[0], e[1], e[2])))
    roots = draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=3))
    marks = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    return graph(labels, edges, roots), marks


def reachable(g, roots):
    seen, stack = set(), list(roots)
    while stack:
        x = stack.pop()
        if x not in seen:
            seen.add(x)
            stack.extend(e.target for e in g.children(x))
    return seen


@settings(max_examples=500, deadline=None)
@given(labeled_graphs())
def test_linearization_invariants(case):
    g, marks = case
    out = linearize(g, marks)
    # positive coverage
    for node in reachable(g, g.sentence_roots):
        if marks[node]:
            assert node in out.sequence
    # no node is expanded twice, and only expanded nodes are ever referenced
    assert len(out.expanded) == len(set(out.expanded))
    assert set(out.sequence) == set(out.expanded)
    # an expanded node appears in the sequence exactly at its first occurrence
    first = []
    for x in out.sequence:
        if x not in first:
            first.append(x)
    assert tuple(first) == out.expanded
    if out.penman:
        parse_penman(out.penman)
    assert linearize(g, marks) == out
