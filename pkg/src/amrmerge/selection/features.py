"""Node input features: summed label-word embeddings plus four graph counts."""

from __future__ import annotations

import hashlib
import re
from pathlib import Path

import numpy as np

from ..merge import DocumentGraph

N_DISCRETE = 4
_SENSE = re.compile(r"-\d+$")


class EmbeddingTable:
    """Word vectors from a ``word v1 v2 ...`` text file, with a hashed fallback.

    Unknown words (and every word when no file is given) get a unit-normal
    vector seeded from the SHA-256 of the word, so they are stable across
    processes and platforms.
    """

    def __init__(self, dim: int = 300, vectors: dict[str, np.ndarray] | None = None):
        self.dim = dim
        self.vectors = vectors or {}
        self._cache: dict[str, np.ndarray] = {}

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingTable":
        vectors: dict[str, np.ndarray] = {}
        dim = None
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                parts = line.rstrip().split(" ")
                if len(parts) < 2:
                    continue
                vec = np.asarray(parts[1:], dtype=float)
                if dim is None:
                    dim = len(vec)
                elif len(vec) != dim:
                    raise ValueError(f"{path}:{lineno}: expected {dim} values, got {len(vec)}")
                vectors[parts[0]] = vec
        if dim is None:
            raise ValueError(f"{path} contains no vectors")
        return cls(dim, vectors)

    def fallback(self, word: str) -> np.ndarray:
        seed = int.from_bytes(hashlib.sha256(word.encode("utf-8")).digest()[:8], "little")
        return np.random.default_rng(seed).standard_normal(self.dim)

    def __getitem__(self, word: str) -> np.ndarray:
        vec = self._cache.get(word)
        if vec is None:
            vec = self.vectors.get(word)
            if vec is None:
                # PropBank frames such as meet-01 fall back to their lemma
                vec = self.vectors.get(_SENSE.sub("", word))
            if vec is None:
                vec = self.fallback(word)
            self._cache[word] = vec
        return vec

    def embed_label(self, label: str) -> np.ndarray:
        total = np.zeros(self.dim)
        for word in label.split():
            total += self[word]
        return total


def discrete_features(graph: DocumentGraph) -> np.ndarray:
    """(in-degree, out-degree, first sentence index, occurrence count) per node.

    Degrees count document-graph edges only, never the artificial root's.
    """
    out = np.zeros((len(graph), N_DISCRETE))
    for e in graph.edges:
        out[e.source, 1] += 1
        out[e.target, 0] += 1
    for i, members in enumerate(graph.members):
        out[i, 2] = min(m.sentence_index for m in members)
        out[i, 3] = len(members)
    return out


def extract_features(graph: DocumentGraph, embeddings: EmbeddingTable) -> np.ndarray:
    emb = np.stack([embeddings.embed_label(label) for label in graph.labels]) if len(graph) else np.zeros((0, embeddings.dim))
    return np.hstack([emb, discrete_features(graph)])
