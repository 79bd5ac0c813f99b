"""Pretrained word-vector files, embedding lookups, and document centroids.

The on-disk format is the common ``.vec`` text layout: a header line
``<count> <dim>`` followed by one line per token, ``token v1 v2 ... vdim``.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from .textprep import TokenSequence


class EmbeddingTable:
    """Immutable token -> vector lookup with a declared OOV policy.

    ``oov_policy`` is ``"zero"`` (unknown tokens resolve to the zero vector,
    keeping shapes fixed) or ``"skip"`` (unknown tokens are dropped, which
    keeps means unbiased).
    """

    def __init__(self, tokens: Sequence[str], vectors: np.ndarray, oov_policy: str = "zero"):
        if oov_policy not in ("zero", "skip"):
            raise ValueError(f"unknown oov_policy {oov_policy!r}")
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise ValueError("vectors must be a 2-d matrix")
        if len(tokens) != vectors.shape[0]:
            raise ValueError("token count does not match vector row count")
        if not np.all(np.isfinite(vectors)):
            raise ValueError("embedding table contains non-finite values")
        self.token_index: dict[str, int] = {}
        for i, tok in enumerate(tokens):
            if tok in self.token_index:
                raise ValueError(f"duplicate token {tok!r} in embedding table")
            self.token_index[tok] = i
        self.vectors = vectors
        self.vectors.setflags(write=False)
        self.oov_policy = oov_policy

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def __contains__(self, token: str) -> bool:
        return token in self.token_index

    def vector(self, token: str) -> np.ndarray | None:
        """The token's vector, or None for OOV under the skip policy."""
        idx = self.token_index.get(token)
        if idx is not None:
            return self.vectors[idx]
        if self.oov_policy == "zero":
            return np.zeros(self.dim)
        return None


def load_vectors(path: str | Path, oov_policy: str = "zero") -> EmbeddingTable:
    """Parse a ``.vec`` text file, validating the header against every row."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path} line 1: header must be '<count> <dim>'")
        count, dim = int(header[0]), int(header[1])
        tokens: list[str] = []
        rows = np.empty((count, dim), dtype=np.float64)
        for i in range(count):
            line = fh.readline()
            if not line:
                raise ValueError(f"{path}: header promises {count} rows, file has {i}")
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise ValueError(
                    f"{path} line {i + 2}: expected {dim} floats after token, got {len(parts) - 1}"
                )
            tokens.append(parts[0])
            rows[i] = [float(x) for x in parts[1:]]
            if not np.all(np.isfinite(rows[i])):
                raise ValueError(f"{path} line {i + 2}: non-finite value")
    return EmbeddingTable(tokens, rows, oov_policy)


def write_vectors(table: EmbeddingTable, path: str | Path) -> None:
    """Write the ``.vec`` format with enough digits to round-trip float64."""
    ordered = sorted(table.token_index.items(), key=lambda kv: kv[1])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table)} {table.dim}\n")
        for token, idx in ordered:
            row = " ".join(repr(float(x)) for x in table.vectors[idx])
            fh.write(f"{token} {row}\n")


def lookup_matrix(seq: TokenSequence, table: EmbeddingTable) -> np.ndarray:
    """Embedding matrix of shape (max_len, dim); PAD and zero-policy OOV rows are zero."""
    out = np.zeros((seq.max_len, table.dim), dtype=np.float64)
    for i, tok in enumerate(seq.tokens):
        idx = table.token_index.get(tok)
        if idx is not None:
            out[i] = table.vectors[idx]
    return out


def doc_centroid(tokens: Sequence[str], table: EmbeddingTable) -> np.ndarray:
    """Arithmetic mean of the resolved token vectors.

    Under the skip policy unknown tokens do not count; under the zero policy
    they contribute zero vectors to the mean.
    """
    resolved = [v for v in (table.vector(t) for t in tokens) if v is not None]
    if not resolved:
        raise ValueError("empty centroid: no token resolvable under the oov policy")
    return np.mean(resolved, axis=0)
