"""Seeded generator of news-style document/summary bundles.

Documents report a few *facts* (an agent doing something to an object,
optionally somewhere).  Salient facts are restated in the summary;
background facts and filler sentences use a vocabulary the summaries never
touch.  Every generated node carries an identity key naming the entity or
event it denotes, which yields exact coreference clusters and gold
alignments.  Agents are role-described officials ("the Indian foreign
minister", the structure that invites hidden-concept conflation) or named
people whose later mentions are bare names (the structure behind name
skipping under name collapse).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .amr import AmrGraph, Constant, Edge, Node, NodeId, emit_penman, parse_penman
from .bundle import AlignmentAnnotation, AlignmentEntry, DocumentBundle, Sentence, TokenAlignment
from .coref import CorefClusters, Mention

COUNTRIES = [
    ("India", "Indian"), ("China", "Chinese"), ("Russia", "Russian"), ("Pakistan", "Pakistani"),
    ("Iran", "Iranian"), ("Estonia", "Estonian"), ("Sweden", "Swedish"), ("Norway", "Norwegian"),
]
FIRST = ["Katrin", "Dmitry", "Sergei", "Amir", "Lena", "Tomas", "Mariam", "Ivo"]
LAST = ["Pargmae", "Medvedev", "Lavrov", "Karimi", "Holm", "Berg", "Aziz", "Tamm"]
ROLES = [("minister", "foreign"), ("minister", "interior"), ("president", None), ("spokeswoman", None)]
EVENTS = [("seize-01", "seized"), ("announce-01", "announced"), ("criticize-01", "criticized"),
          ("sign-01", "signed"), ("propose-01", "proposed"), ("fund-01", "funded")]
OBJECTS = [("opium", ["opium"]), ("heroin", ["heroin"]), ("agreement", ["an", "agreement"]),
           ("plan", ["a", "plan"]), ("missile", ["missiles"]), ("cooperate-01", ["cooperation"])]
BACKGROUND_EVENTS = [("build-01", "built"), ("open-01", "opened"), ("repair-01", "repaired")]
BACKGROUND_OBJECTS = [("road", ["a", "road"]), ("school", ["a", "school"]), ("bridge", ["a", "bridge"])]
BACKGROUND_AGENTS = [("police", ["police"]), ("company", ["a", "company"]), ("villager", ["villagers"])]
REPORTERS = [("say-01", "said"), ("state-01", "stated"), ("report-01", "reported")]
FILLER = [
    (("continue-01", "investigate-01"), ["the", "investigation", "continues"], (1, 2), (2, 3)),
    (("expect-01", "decision"), ["a", "decision", "is", "expected"], (3, 4), (1, 2)),
    (("decline-01", "comment-01"), ["locals", "declined", "comment"], (1, 2), (2, 3)),
]


@dataclass
class _Tree:
    concept: str
    key: tuple
    span: tuple[int, int] | None = None
    children: list = field(default_factory=list)
    constants: list = field(default_factory=list)


@dataclass
class _Ref:
    key: tuple


Child = Union[_Tree, _Ref]


class _Text:
    def __init__(self) -> None:
        self.tokens: list[str] = []

    def add(self, *words: str) -> tuple[int, int]:
        start = len(self.tokens)
        self.tokens.extend(words)
        return start, len(self.tokens)


@dataclass
class _Entity:
    eid: int
    kind: str  # "role" or "named"
    role: str
    mod: str | None = None
    country: tuple[str, str] | None = None
    first: str = ""
    last: str = ""


@dataclass
class _Fact:
    fid: int
    agent: _Entity
    event: tuple[str, str]
    obj: tuple[str, list[str]]
    country: tuple[str, str] | None
    salient: bool


def _country_tree(name: tuple[str, str], text: _Text, adjective: bool) -> _Tree:
    span = text.add(name[1] if adjective else name[0])
    key = ("country", name[0])
    return _Tree("country", key, span, [(":name", _Tree("name", key + ("name",), span, [], [(":op1", name[0], True)]))])


def _entity_tree(ent: _Entity, text: _Text, full: bool) -> tuple[_Tree, tuple[int, int]]:
    """An entity mention; returns the tree and the noun-phrase span."""
    key = ("ent", ent.eid)
    if ent.kind == "role":
        start = len(text.tokens)
        text.add("the")
        country = _country_tree(ent.country, text, adjective=True) if ent.country else None
        mod = None
        if ent.mod:
            mod = _Tree(ent.mod, key + ("mod",), text.add(ent.mod))
        role_span = text.add(ent.role)
        role = _Tree(ent.role, key + ("role",), role_span, [(":mod", mod)] if mod else [])
        hor = _Tree("have-org-role-91", key + ("hor",), role_span,
                    ([(":ARG1", country)] if country else []) + [(":ARG2", role)])
        person = _Tree("person", key + ("person",), role_span, [(":ARG0-of", hor)])
        return person, (start, len(text.tokens))
    start = len(text.tokens)
    branches = []
    if full:
        role_span = text.add(ent.role)
        hor = _Tree("have-org-role-91", key + ("hor",), role_span, [(":ARG2", _Tree(ent.role, key + ("role",), role_span))])
    name_span = text.add(ent.first, ent.last)
    name = _Tree("name", key + ("name",), name_span, [], [(":op1", ent.first, True), (":op2", ent.last, True)])
    branches.append((":name", name))
    if full:
        branches.append((":ARG0-of", hor))
    return _Tree("person", key + ("person",), name_span, branches), (start, len(text.tokens))


def _flatten(tree: _Tree, sentence: int):
    nodes: list[tuple[_Tree, NodeId]] = []
    by_key: dict[tuple, NodeId] = {}
    pending: list[tuple[NodeId, str, Child]] = []

    def visit(t: _Tree) -> NodeId:
        nid = NodeId(sentence, len(nodes))
        nodes.append((t, nid))
        by_key[t.key] = nid
        for role, child in t.children:
            slot = len(pending)
            pending.append((nid, role, child))
            if isinstance(child, _Tree):
                pending[slot] = (nid, role, visit(child))
        return nid

    root = visit(tree)
    edges = []
    for src, role, child in pending:
        target = by_key[child.key] if isinstance(child, _Ref) else child
        edges.append(Edge(src, target, role))
    graph_nodes = tuple(Node(nid, t.concept, f"v{nid.node_index}") for t, nid in nodes)
    constants = tuple(Constant(nid, r, v, q) for t, nid in nodes for r, v, q in t.constants)
    graph = AmrGraph(graph_nodes, tuple(edges), root, constants)
    alignments = [TokenAlignment(nid, *t.span) for t, nid in nodes if t.span is not None]
    keys = {nid: t.key for t, nid in nodes}
    return graph, alignments, keys


@dataclass
class _SentenceOut:
    text: str
    graph: AmrGraph
    alignments: list[TokenAlignment]
    keys: dict[NodeId, tuple]
    mentions: list[tuple[int, tuple[int, int]]]


def _finish(tree: _Tree, text: _Text, sentence: int, mentions) -> _SentenceOut:
    graph, alignments, keys = _flatten(tree, sentence)
    # Round-trip through PENMAN text so numbering matches what load_bundle sees.
    reparsed = parse_penman(emit_penman(graph), sentence)
    assert [n.concept for n in reparsed.nodes] == [n.concept for n in graph.nodes]
    return _SentenceOut(" ".join(text.tokens), reparsed, alignments, keys, mentions)


class SyntheticCorpus:
    """Generator of bundles.

    Parameters
    ----------
    seed : int
        Seed for every random choice.
    gold : str
        ``"identity"`` aligns document nodes to summary nodes denoting the
        same entity or event; ``"label"`` aligns by equal concept, making
        gold labels coincide with the noisy training labels.
    reentrancy : float
        Probability of an extra re-entrant edge inside each sentence graph.
    """

    def __init__(self, seed: int = 0, gold: str = "identity", reentrancy: float = 0.0):
        if gold not in ("identity", "label"):
            raise ValueError("gold must be 'identity' or 'label'")
        self.rng = np.random.default_rng(seed)
        self.gold = gold
        self.reentrancy = reentrancy

    def _pick(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def _entities(self, count: int) -> list[_Entity]:
        ents = []
        role_mod = ROLES[int(self.rng.integers(2))]  # shared role invites conflation
        countries = list(self.rng.permutation(len(COUNTRIES)))
        names = list(self.rng.permutation(len(FIRST)))
        for eid in range(count):
            if self.rng.random() < 0.5:
                role, mod = role_mod if self.rng.random() < 0.7 else self._pick(ROLES)
                ents.append(_Entity(eid, "role", role, mod, COUNTRIES[countries.pop()]))
            else:
                i = names.pop()
                role = self._pick(ROLES)[0]
                ents.append(_Entity(eid, "named", role, first=FIRST[i], last=LAST[(i + 3) % len(LAST)]))
        return ents

    def _fact_sentence(self, fact: _Fact, sentence: int, first_mention: set[int], wrap: bool) -> _SentenceOut:
        text = _Text()
        mentions = []
        reporter = None
        if wrap:
            agents = BACKGROUND_AGENTS
            rep_concept, rep_words = self._pick(agents)
            rep_span = text.add(*rep_words)
            verb = self._pick(REPORTERS)
            reporter = (_Tree(rep_concept, ("reporter", sentence), (rep_span[1] - 1, rep_span[1])),
                        _Tree(verb[0], ("report", sentence), text.add(verb[1])))
        full = fact.agent.eid not in first_mention
        agent, np_span = _entity_tree(fact.agent, text, full)
        first_mention.add(fact.agent.eid)
        mentions.append((fact.agent.eid, np_span))
        event = _Tree(fact.event[0], ("fact", fact.fid, "event"), text.add(fact.event[1]))
        obj_words = fact.obj[1]
        obj_span = text.add(*obj_words)
        obj = _Tree(fact.obj[0], ("fact", fact.fid, "object"), (obj_span[1] - 1, obj_span[1]))
        event.children = [(":ARG0", agent), (":ARG1", obj)]
        if fact.country:
            text.add("in")
            event.children.append((":location", _country_tree(fact.country, text, adjective=False)))
        root = event
        if reporter is not None:
            rep, verb_node = reporter
            verb_node.children = [(":ARG0", rep), (":ARG1", event)]
            root = verb_node
        if self.rng.random() < self.reentrancy:
            # e.g. "... seized opium for themselves": the agent fills a second role
            event.children.append((":beneficiary", _Ref(agent.key)))
        return _finish(root, text, sentence, mentions)

    def _filler_sentence(self, sentence: int) -> _SentenceOut:
        (c1, c2), words, span1, span2 = self._pick(FILLER)
        text = _Text()
        text.add(*words)
        tree = _Tree(c1, ("filler", sentence, 0), span1, [(":ARG1", _Tree(c2, ("filler", sentence, 1), span2))])
        if self.rng.random() < 0.3:
            # date-entity as an only child: exercised by name/date collapse
            year = str(int(self.rng.integers(2000, 2010)))
            text.add("since", year)
            tree.children.append((":time", _Tree("date-entity", ("date", sentence), (len(text.tokens) - 1, len(text.tokens)), [], [(":year", year, False)])))
            tree.children = tree.children[-1:]
        return _finish(tree, text, sentence, [])

    def _summary_sentence(self, fact: _Fact, sentence: int) -> _SentenceOut:
        text = _Text()
        agent, _ = _entity_tree(fact.agent, text, full=True)
        event = _Tree(fact.event[0], ("fact", fact.fid, "event"), text.add(fact.event[1]))
        obj_span = text.add(*fact.obj[1])
        event.children = [(":ARG0", agent), (":ARG1", _Tree(fact.obj[0], ("fact", fact.fid, "object"), (obj_span[1] - 1, obj_span[1])))]
        if fact.country:
            text.add("in")
            event.children.append((":location", _country_tree(fact.country, text, adjective=False)))
        return _finish(event, text, sentence, [])

    def bundle(self, doc_id: str) -> DocumentBundle:
        n_agents = int(self.rng.integers(2, 4))
        ents = self._entities(n_agents)
        n_salient = int(self.rng.integers(1, 3))
        facts = []
        for fid in range(n_salient + 1):
            salient = fid < n_salient
            agent = ents[fid % len(ents)] if salient else ents[-1]
            country = COUNTRIES[int(self.rng.integers(len(COUNTRIES)))] if self.rng.random() < 0.5 else None
            if salient:
                facts.append(_Fact(fid, agent, self._pick(EVENTS), self._pick(OBJECTS), country, True))
            else:
                facts.append(_Fact(fid, agent, self._pick(BACKGROUND_EVENTS), self._pick(BACKGROUND_OBJECTS), None, False))
        plan = [f for f in facts if f.salient for _ in range(2)] + [f for f in facts if not f.salient]
        plan = [plan[i] for i in self.rng.permutation(len(plan))]
        # the first salient fact leads, as in news
        lead = next(i for i, f in enumerate(plan) if f.salient)
        plan.insert(0, plan.pop(lead))
        n_filler = int(self.rng.integers(0, 3))
        doc: list[_SentenceOut] = []
        first_mention: set[int] = set()
        slots = ["fact"] * len(plan) + ["filler"] * n_filler
        slots = [slots[0]] + [slots[1:][i] for i in self.rng.permutation(len(slots) - 1)]
        facts_iter = iter(plan)
        for i, slot in enumerate(slots):
            if slot == "fact":
                doc.append(self._fact_sentence(next(facts_iter), i, first_mention, wrap=self.rng.random() < 0.3))
            else:
                doc.append(self._filler_sentence(i))
        summary = [self._summary_sentence(f, i) for i, f in enumerate(f for f in facts if f.salient)]

        mention_spans: dict[int, list[Mention]] = {}
        for s, out in enumerate(doc):
            for eid, (start, end) in out.mentions:
                mention_spans.setdefault(eid, []).append(Mention(s, start, end))
        coref = CorefClusters(tuple(tuple(ms) for _, ms in sorted(mention_spans.items()) if len(ms) >= 2))

        summary_by_key: dict[tuple, list[NodeId]] = {}
        summary_by_label: dict[str, list[NodeId]] = {}
        for out in summary:
            for node in out.graph.nodes:
                summary_by_key.setdefault(out.keys[node.id], []).append(node.id)
                summary_by_label.setdefault(node.concept, []).append(node.id)
        entries = {}
        for out in doc:
            for node in out.graph.nodes:
                if self.gold == "identity":
                    handles = summary_by_key.get(out.keys[node.id], [])
                else:
                    handles = summary_by_label.get(node.concept, [])
                handles = [h for h in handles if h.node_index < 26]
                if handles:
                    entries[node.id] = AlignmentEntry(frozenset(handles), False)
        alignments = tuple(a for out in doc for a in out.alignments)
        return DocumentBundle(
            doc_id,
            tuple(Sentence(o.text, o.graph) for o in summary),
            tuple(Sentence(o.text, o.graph) for o in doc),
            alignments,
            coref,
            AlignmentAnnotation(entries),
        )

    def corpus(self, n: int, prefix: str = "synth") -> list[DocumentBundle]:
        return [self.bundle(f"{prefix}-{i:03d}") for i in range(n)]
