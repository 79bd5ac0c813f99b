"""Cosine similarity, venue scope-score vectors, and the similarity-flow MLP."""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .neuralcore import Dense, Dropout, Parameter, ReLU

log = logging.getLogger(__name__)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """A.B / (|A||B|), clamped to [-1, 1] against floating-point rounding."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 1:
        raise ValueError(f"cosine needs two equal-length vectors, got {a.shape} and {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for zero-norm input")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


@dataclass(frozen=True)
class ScopeMatrix:
    """Per-venue scope representations, rows in canonical venue order."""

    venue_ids: tuple[str, ...]
    reprs: np.ndarray  # (N, d)

    def __post_init__(self) -> None:
        reprs = np.asarray(self.reprs, dtype=np.float64)
        if reprs.ndim != 2 or reprs.shape[0] != len(self.venue_ids):
            raise ValueError("scope matrix rows must match the venue list")
        object.__setattr__(self, "reprs", reprs)

    @property
    def n_venues(self) -> int:
        return len(self.venue_ids)

    @property
    def dim(self) -> int:
        return self.reprs.shape[1]

    def save(self, path: str | Path) -> None:
        """Header (N, d, venue ids) + little-endian float64 rows."""
        ids_blob = "\n".join(self.venue_ids).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(b"VENUERANK-SCOPE v1\n")
            fh.write(struct.pack("<III", self.n_venues, self.dim, len(ids_blob)))
            fh.write(ids_blob)
            fh.write(np.ascontiguousarray(self.reprs, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "ScopeMatrix":
        with open(path, "rb") as fh:
            magic = fh.readline()
            if magic != b"VENUERANK-SCOPE v1\n":
                raise ValueError(f"{path}: not a scope matrix file")
            n, d, blob_len = struct.unpack("<III", fh.read(12))
            ids = tuple(fh.read(blob_len).decode("utf-8").split("\n"))
            reprs = np.frombuffer(fh.read(n * d * 8), dtype="<f8").reshape(n, d).copy()
        return cls(ids, reprs)


def scope_scores(doc_repr: np.ndarray, scope: ScopeMatrix,
                 on_zero_row: str = "error") -> np.ndarray:
    """Cosine of the document representation against every venue scope row.

    ``on_zero_row`` chooses how degenerate zero-norm scope rows are handled:
    ``"error"`` raises; ``"neg_one"`` scores them -1 with a warning.
    """
    doc_repr = np.asarray(doc_repr, dtype=np.float64)
    if doc_repr.shape != (scope.dim,):
        raise ValueError(f"doc repr shape {doc_repr.shape} does not match scope dim {scope.dim}")
    doc_norm = np.linalg.norm(doc_repr)
    if doc_norm == 0.0:
        raise ValueError("zero-norm document representation")
    row_norms = np.linalg.norm(scope.reprs, axis=1)
    zero_rows = row_norms == 0.0
    if np.any(zero_rows):
        if on_zero_row == "error":
            bad = [scope.venue_ids[i] for i in np.flatnonzero(zero_rows)]
            raise ValueError(f"zero-norm scope representation for venues {bad}")
        log.warning("scoring %d zero-norm scope rows as -1", int(zero_rows.sum()))
        row_norms = np.where(zero_rows, 1.0, row_norms)
    scores = (scope.reprs @ doc_repr) / (row_norms * doc_norm)
    scores = np.clip(scores, -1.0, 1.0)
    if np.any(zero_rows):
        scores[zero_rows] = -1.0
    return scores


class SimilarityFlow:
    """Dense(1500) -> Dense(1000) -> Dense(500), ReLU + dropout(0.4) each."""

    DEFAULT_WIDTHS = (1500, 1000, 500)

    def __init__(self, n_venues: int, rng: np.random.Generator,
                 widths: tuple[int, ...] = DEFAULT_WIDTHS, dropout_rate: float = 0.4,
                 name: str = "simflow"):
        if any(w < 1 for w in widths):
            raise ValueError("similarity-flow widths must be positive")
        self.widths = tuple(widths)
        self.layers: list[tuple[Dense, Dropout]] = []
        in_dim = n_venues
        for i, width in enumerate(widths):
            self.layers.append((Dense(in_dim, width, rng, f"{name}.fc{i}"), Dropout(dropout_rate)))
            in_dim = width

    @property
    def out_width(self) -> int:
        return self.widths[-1]

    def parameters(self) -> list[Parameter]:
        return [p for dense, _ in self.layers for p in dense.parameters()]

    def forward(self, scores: np.ndarray, train: bool = False,
                rng: np.random.Generator | None = None) -> tuple[np.ndarray, list]:
        x = np.asarray(scores, dtype=np.float64)
        caches = []
        for dense, drop in self.layers:
            y, dense_cache = dense.forward(x)
            a, relu_cache = ReLU.forward(y)
            x, drop_cache = drop.forward(a, train, rng)
            caches.append((dense_cache, relu_cache, drop_cache))
        return x, caches

    def backward(self, grad: np.ndarray, caches: list) -> np.ndarray:
        for (dense, drop), (dense_cache, relu_cache, drop_cache) in zip(
                reversed(self.layers), reversed(caches)):
            grad = drop.backward(grad, drop_cache)
            grad = ReLU.backward(grad, relu_cache)
            grad = dense.backward(grad, dense_cache)
        return grad
