"""Sentence-level AMR graphs and a small PENMAN reader/writer.

Graphs keep edges in their *surface* orientation: ``(p / person :ARG0-of
(h / have-org-role-91))`` yields the edge ``p -:ARG0-of-> h``.  Descendant
subgraphs and depth-first traversals downstream rely on that orientation, so
inverse roles are never normalized.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import NamedTuple


class NodeId(NamedTuple):
    sentence_index: int
    node_index: int

    def __str__(self) -> str:
        return f"{self.sentence_index}.{self.node_index}"


class Node(NamedTuple):
    id: NodeId
    concept: str
    variable: str


class Edge(NamedTuple):
    source: NodeId
    target: NodeId
    role: str


class Constant(NamedTuple):
    """A literal leaf such as ``:op1 "India"`` or ``:polarity -``."""

    parent: NodeId
    role: str
    value: str
    quoted: bool = False


class PenmanError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class AmrGraph:
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    root: NodeId
    constants: tuple[Constant, ...] = ()
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        index = {n.id: n for n in self.nodes}
        if len(index) != len(self.nodes):
            raise ValueError("duplicate node ids")
        if self.root not in index:
            raise ValueError(f"root {self.root} is not a node")
        variables = [n.variable for n in self.nodes]
        if len(set(variables)) != len(variables):
            raise ValueError("variables must be unique within a graph")
        for e in self.edges:
            if e.source not in index or e.target not in index:
                raise ValueError(f"edge {e} has an endpoint outside the graph")
        for c in self.constants:
            if c.parent not in index:
                raise ValueError(f"constant {c} attached to unknown node")
        object.__setattr__(self, "_index", index)
        if not self._weakly_connected():
            raise ValueError("graph is not connected to its root")

    def _weakly_connected(self) -> bool:
        adjacent: dict[NodeId, list[NodeId]] = {n.id: [] for n in self.nodes}
        for e in self.edges:
            adjacent[e.source].append(e.target)
            adjacent[e.target].append(e.source)
        seen = {self.root}
        stack = [self.root]
        while stack:
            for nxt in adjacent[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return len(seen) == len(self.nodes)

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, node_id: object) -> bool:
        return node_id in self._index

    @property
    def sentence_index(self) -> int:
        return self.root.sentence_index

    @property
    def node_ids(self) -> list[NodeId]:
        return [n.id for n in self.nodes]

    def concept(self, node_id: NodeId) -> str:
        return self._index[node_id].concept

    def variable(self, node_id: NodeId) -> str:
        return self._index[node_id].variable

    def children(self, node_id: NodeId) -> list[Edge]:
        return [e for e in self.edges if e.source == node_id]

    def parents(self, node_id: NodeId) -> list[Edge]:
        return [e for e in self.edges if e.target == node_id]

    def constants_of(self, node_id: NodeId) -> list[Constant]:
        return [c for c in self.constants if c.parent == node_id]

    def descendants(self, node_id: NodeId) -> set[NodeId]:
        """All nodes reachable along outgoing edges, including ``node_id``."""
        children: dict[NodeId, list[NodeId]] = {}
        for e in self.edges:
            children.setdefault(e.source, []).append(e.target)
        seen = {node_id}
        stack = [node_id]
        while stack:
            for nxt in children.get(stack.pop(), ()):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen


# --- reading -----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<slash>/)
  | (?P<role>:[^\s()":]*)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<symbol>[^\s()"/:][^\s()"]*)
  | (?P<error>.)
    """,
    re.VERBOSE | re.DOTALL,
)


class _Token(NamedTuple):
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, line_start = 1, 0
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        col = m.start() - line_start + 1
        if kind == "ws":
            chunk = m.group()
            newlines = chunk.count("\n")
            if newlines:
                line += newlines
                line_start = m.start() + chunk.rfind("\n") + 1
            continue
        if kind == "error":
            if m.group() == '"':
                raise PenmanError("unterminated string literal", line, col)
            raise PenmanError(f"unexpected character {m.group()!r}", line, col)
        tokens.append(_Token(kind, m.group(), line, col))
    return tokens


class _Parser:
    def __init__(self, text: str, sentence_index: int):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.sentence_index = sentence_index
        self.text = text
        self.nodes: list[Node] = []
        self.by_var: dict[str, NodeId] = {}
        # (parent, role, kind, payload) in textual order
        self.relations: list[tuple[NodeId, str, str, object]] = []

    def _eof_position(self) -> tuple[int, int]:
        lines = self.text.split("\n")
        return len(lines), len(lines[-1]) + 1

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.peek()
        if tok is None:
            raise PenmanError(f"unexpected end of input, expected {what}", *self._eof_position())
        if tok.kind != kind:
            raise PenmanError(f"expected {what}, found {tok.text!r}", tok.line, tok.column)
        self.pos += 1
        return tok

    def parse(self) -> AmrGraph:
        if self.peek() is None:
            raise PenmanError("empty input", 1, 1)
        root = self.parse_node()
        extra = self.peek()
        if extra is not None:
            if extra.kind == "rparen":
                raise PenmanError("unbalanced ')'", extra.line, extra.column)
            raise PenmanError(f"trailing content {extra.text!r}", extra.line, extra.column)
        edges, constants = [], []
        for parent, role, kind, payload in self.relations:
            if kind == "node":
                edges.append(Edge(parent, payload, role))
            elif kind == "symbol" and payload in self.by_var:
                edges.append(Edge(parent, self.by_var[payload], role))
            else:
                constants.append(Constant(parent, role, payload, kind == "string"))
        return AmrGraph(tuple(self.nodes), tuple(edges), root, tuple(constants))

    def parse_node(self) -> NodeId:
        opener = self.expect("lparen", "'('")
        var_tok = self.expect("symbol", "a variable")
        if var_tok.text in self.by_var:
            raise PenmanError(f"duplicate variable {var_tok.text!r}", var_tok.line, var_tok.column)
        self.expect("slash", "'/'")
        concept_tok = self.peek()
        if concept_tok is None or concept_tok.kind not in ("symbol", "string"):
            where = (concept_tok.line, concept_tok.column) if concept_tok else self._eof_position()
            raise PenmanError("expected a concept after '/'", *where)
        self.pos += 1
        node_id = NodeId(self.sentence_index, len(self.nodes))
        self.nodes.append(Node(node_id, concept_tok.text.strip('"'), var_tok.text))
        self.by_var[var_tok.text] = node_id
        while True:
            tok = self.peek()
            if tok is None:
                raise PenmanError(
                    f"unbalanced '(' opened at line {opener.line}, column {opener.column}",
                    *self._eof_position(),
                )
            if tok.kind == "rparen":
                self.pos += 1
                return node_id
            if tok.kind != "role":
                raise PenmanError(f"expected a role or ')', found {tok.text!r}", tok.line, tok.column)
            self.pos += 1
            target = self.peek()
            if target is None or target.kind in ("rparen", "role", "slash"):
                where = (target.line, target.column) if target else self._eof_position()
                raise PenmanError(f"relation {tok.text} has no target", *where)
            if target.kind == "lparen":
                slot = len(self.relations)
                self.relations.append((node_id, tok.text, "node", None))
                child = self.parse_node()
                self.relations[slot] = (node_id, tok.text, "node", child)
            elif target.kind == "string":
                self.pos += 1
                value = re.sub(r"\\(.)", r"\1", target.text[1:-1])
                self.relations.append((node_id, tok.text, "string", value))
            else:
                self.pos += 1
                self.relations.append((node_id, tok.text, "symbol", target.text))


def parse_penman(text: str, sentence_index: int = 0) -> AmrGraph:
    """Parse one PENMAN s-expression.

    Nodes are numbered in order of their instance definitions.  A bare symbol
    that names a variable anywhere in the graph becomes a re-entrant edge;
    any other bare symbol or quoted string becomes a :class:`Constant`.
    """
    return _Parser(text, sentence_index).parse()


# --- writing -----------------------------------------------------------------


def _default_variable(node: Node) -> str:
    letters = [ch for ch in node.concept.lower() if "a" <= ch <= "z"]
    return f"{letters[0] if letters else 'x'}{node.id.node_index}"


_SYMBOL_RE = re.compile(r'[^\s()"/:][^\s()"]*')


def quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def format_concept(label: str) -> str:
    """The label as a bare symbol when it tokenizes as one, else quoted."""
    return label if _SYMBOL_RE.fullmatch(label) else quote(label)


def _format_constant(c: Constant) -> str:
    return quote(c.value) if c.quoted else c.value


def _invert(role: str) -> str:
    return role[:-3] if role.endswith("-of") else role + "-of"


def emit_penman(graph: AmrGraph, indent: int | None = 4) -> str:
    """Serialize ``graph``; later mentions of a node are bare variables.

    Variables are regenerated as concept initial plus node index, so the
    output never depends on the variable names seen at parse time.  Nodes
    only reachable against edge direction are attached with inverted roles.
    """
    names = {n.id: _default_variable(n) for n in graph.nodes}
    reachable = graph.descendants(graph.root)
    out_edges: dict[NodeId, list[tuple[str, NodeId, int]]] = {n.id: [] for n in graph.nodes}
    in_edges: dict[NodeId, list[tuple[str, NodeId, int]]] = {n.id: [] for n in graph.nodes}
    for i, e in enumerate(graph.edges):
        out_edges[e.source].append((e.role, e.target, i))
        if e.source not in reachable:
            in_edges[e.target].append((_invert(e.role), e.source, i))
    consts: dict[NodeId, list[Constant]] = {}
    for c in graph.constants:
        consts.setdefault(c.parent, []).append(c)

    defined: set[NodeId] = set()
    used: set[int] = set()

    def render(node_id: NodeId, depth: int) -> str:
        defined.add(node_id)
        parts = [f"({names[node_id]} / {format_concept(graph.concept(node_id))}"]
        # Inverted fallbacks go after forward edges so tree-shaped input is untouched.
        for role, other, i in out_edges[node_id] + in_edges[node_id]:
            if i in used:
                continue
            used.add(i)
            if other in defined:
                parts.append(f"{role} {names[other]}")
            else:
                parts.append(f"{role} {render(other, depth + 1)}")
        for c in consts.get(node_id, ()):
            parts.append(f"{c.role} {_format_constant(c)}")
        if indent is None:
            return " ".join(parts) + ")"
        pad = "\n" + " " * (indent * (depth + 1))
        return pad.join(parts) + ")"

    return render(graph.root, 0)
