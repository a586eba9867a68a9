"""Document-summary bundles: JSON loading, validation and annotation TSVs."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, NamedTuple

from .amr import AmrGraph, NodeId, PenmanError, emit_penman, parse_penman
from .coref import CorefClusters, load_coref


class BundleError(ValueError):
    """Raised for malformed or inconsistent bundle data."""


class TokenAlignment(NamedTuple):
    node: NodeId
    start: int
    end: int


@dataclass(frozen=True)
class Sentence:
    text: str
    graph: AmrGraph

    @property
    def tokens(self) -> list[str]:
        return self.text.split()


class AlignmentEntry(NamedTuple):
    handles: frozenset[NodeId]
    abstractive: bool = False


@dataclass(frozen=True)
class AlignmentAnnotation:
    """Gold document-to-summary node alignments.

    Document nodes missing from ``entries`` are unaligned.
    """

    entries: Mapping[NodeId, AlignmentEntry] = field(default_factory=dict)

    def handles(self, node: NodeId) -> frozenset[NodeId]:
        entry = self.entries.get(node)
        return entry.handles if entry else frozenset()


@dataclass(frozen=True)
class DocumentBundle:
    doc_id: str
    summary: tuple[Sentence, ...]
    document: tuple[Sentence, ...]
    alignments: tuple[TokenAlignment, ...] = ()
    coref: CorefClusters | None = None
    gold: AlignmentAnnotation | None = None

    @property
    def graphs(self) -> list[AmrGraph]:
        return [s.graph for s in self.document]

    @property
    def summary_graphs(self) -> list[AmrGraph]:
        return [s.graph for s in self.summary]

    def document_nodes(self) -> list[NodeId]:
        return [nid for s in self.document for nid in s.graph.node_ids]

    def concept(self, node: NodeId) -> str:
        return self.document[node.sentence_index].graph.concept(node)

    def spans(self, node: NodeId) -> list[tuple[int, int]]:
        index = self.__dict__.get("_span_index")
        if index is None:
            index = {}
            for a in self.alignments:
                index.setdefault(a.node, []).append((a.start, a.end))
            object.__setattr__(self, "_span_index", index)
        return index.get(node, [])


def _sentence_list(data: object, side: str) -> tuple[Sentence, ...]:
    if not isinstance(data, list):
        raise BundleError(f"'{side}' must be a list of sentences")
    sentences = []
    for i, item in enumerate(data):
        if not isinstance(item, dict) or "penman" not in item:
            raise BundleError(f"{side} sentence {i} has no 'penman' graph")
        try:
            graph = parse_penman(item["penman"], i)
        except (PenmanError, ValueError) as exc:
            raise BundleError(f"{side} sentence {i}: {exc}") from exc
        sentences.append(Sentence(str(item.get("text", "")), graph))
    return tuple(sentences)


def bundle_from_dict(data: Mapping) -> DocumentBundle:
    if "doc_id" not in data:
        raise BundleError("bundle has no 'doc_id'")
    doc_id = str(data["doc_id"])
    summary = _sentence_list(data.get("summary"), "summary")
    document = _sentence_list(data.get("document"), "document")
    if not summary:
        raise BundleError(f"{doc_id}: summary is empty")
    if not document:
        raise BundleError(f"{doc_id}: document has no sentences")

    alignments = []
    for item in data.get("alignments", []):
        try:
            node = NodeId(int(item["sent"]), int(item["node"]))
            start, end = (int(x) for x in item["span"])
        except (KeyError, TypeError, ValueError) as exc:
            raise BundleError(f"{doc_id}: malformed alignment {item!r}") from exc
        if not 0 <= node.sentence_index < len(document) or node not in document[node.sentence_index].graph:
            raise BundleError(f"{doc_id}: alignment to nonexistent node {node}")
        n_tokens = len(document[node.sentence_index].tokens)
        if not 0 <= start < end <= n_tokens:
            raise BundleError(
                f"{doc_id}: span [{start}, {end}) for node {node} outside {n_tokens} tokens"
            )
        alignments.append(TokenAlignment(node, start, end))

    coref = None
    if data.get("coref") is not None:
        try:
            coref = load_coref(data["coref"])
        except ValueError as exc:
            raise BundleError(f"{doc_id}: {exc}") from exc
        for mention in coref.mentions():
            if not 0 <= mention.sentence < len(document):
                raise BundleError(f"{doc_id}: coref mention {mention} in unknown sentence")
            if mention.end > len(document[mention.sentence].tokens):
                raise BundleError(f"{doc_id}: coref mention {mention} exceeds sentence length")

    bundle = DocumentBundle(doc_id, summary, document, tuple(alignments), coref)
    if data.get("annotations_tsv"):
        bundle = replace(bundle, gold=parse_annotation_tsv(data["annotations_tsv"], bundle))
    return bundle


def load_bundle(path: str | Path) -> DocumentBundle:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise BundleError(f"cannot read bundle {path}: {exc}") from exc
    return bundle_from_dict(data)


def bundle_to_dict(bundle: DocumentBundle) -> dict:
    out = {
        "doc_id": bundle.doc_id,
        "summary": [{"text": s.text, "penman": emit_penman(s.graph)} for s in bundle.summary],
        "document": [{"text": s.text, "penman": emit_penman(s.graph)} for s in bundle.document],
        "alignments": [
            {"sent": a.node.sentence_index, "node": a.node.node_index, "span": [a.start, a.end]}
            for a in bundle.alignments
        ],
    }
    if bundle.coref is not None:
        out["coref"] = bundle.coref.to_json()
    if bundle.gold is not None:
        out["annotations_tsv"] = format_annotation_tsv(bundle.gold, bundle)
    return out


# --- annotation spreadsheet --------------------------------------------------

_HANDLE_RE = re.compile(r"^(\d+)([a-z])$")
_SENTENCE_RE = re.compile(r"^#\s*sentence\s+(\d+)\s*$", re.IGNORECASE)


def _decode_handle(handle: str, bundle: DocumentBundle, offset: int) -> NodeId:
    m = _HANDLE_RE.match(handle)
    if not m:
        raise BundleError(f"malformed summary handle {handle!r}")
    sent = int(m.group(1)) - offset
    index = ord(m.group(2)) - ord("a")
    if not 0 <= sent < len(bundle.summary):
        raise BundleError(f"handle {handle!r} names a nonexistent summary sentence")
    if index >= len(bundle.summary[sent].graph):
        raise BundleError(f"handle {handle!r} is beyond the nodes of summary sentence {m.group(1)}")
    return NodeId(sent, index)


def encode_handle(node: NodeId, one_based: bool = True) -> str:
    if node.node_index >= 26:
        raise BundleError(f"summary node {node} has no single-letter handle")
    return f"{node.sentence_index + int(one_based)}{chr(ord('a') + node.node_index)}"


def parse_annotation_tsv(text: str, bundle: DocumentBundle, one_based: bool = True) -> AlignmentAnnotation:
    """Decode an annotation spreadsheet exported as TSV.

    Rows are ``node<TAB>handles<TAB>abs`` and belong to the document sentence
    named by the most recent ``# sentence N`` line (the first sentence when no
    such line precedes them).  With ``one_based`` (the annotators' convention)
    document node ``3`` is the third node of its sentence and handle ``2d`` is
    the fourth node of the second summary sentence; otherwise all numbers are
    0-based.  Letters always start at ``a`` for the first node.
    """
    offset = int(one_based)
    sentence = 0
    entries: dict[NodeId, AlignmentEntry] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip():
            continue
        if raw.lstrip().startswith("#"):
            m = _SENTENCE_RE.match(raw.strip())
            if m:
                sentence = int(m.group(1)) - offset
                if not 0 <= sentence < len(bundle.document):
                    raise BundleError(f"line {lineno}: no document sentence {m.group(1)}")
            continue
        cells = [c.strip() for c in raw.split("\t")]
        try:
            node = NodeId(sentence, int(cells[0]) - offset)
        except ValueError as exc:
            raise BundleError(f"line {lineno}: bad node index {cells[0]!r}") from exc
        if node not in bundle.document[sentence].graph:
            raise BundleError(f"line {lineno}: document sentence has no node {cells[0]}")
        handles = cells[1].split() if len(cells) > 1 else []
        abstractive = len(cells) > 2 and cells[2].lower() in {"abs", "abstractive"}
        if not handles:
            continue
        try:
            decoded = frozenset(_decode_handle(h, bundle, offset) for h in handles)
        except BundleError as exc:
            raise BundleError(f"line {lineno}: {exc}") from exc
        entries[node] = AlignmentEntry(decoded, abstractive)
    return AlignmentAnnotation(entries)


def format_annotation_tsv(annotation: AlignmentAnnotation, bundle: DocumentBundle, one_based: bool = True) -> str:
    offset = int(one_based)
    lines = []
    for i, sent in enumerate(bundle.document):
        lines.append(f"# sentence {i + offset}")
        for nid in sent.graph.node_ids:
            entry = annotation.entries.get(nid)
            if entry is None:
                lines.append(f"{nid.node_index + offset}\t\t")
                continue
            handles = " ".join(encode_handle(h, one_based) for h in sorted(entry.handles))
            lines.append(f"{nid.node_index + offset}\t{handles}\t{'abs' if entry.abstractive else ''}")
    return "\n".join(lines) + "\n"
