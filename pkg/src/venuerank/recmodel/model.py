"""The three venue-ranking architectures, hand-assembled from core layers.

Wiring per variant (scope branch in brackets, present when the feature
combination enables it):

* ``baseline``     embed -> conv -> pool [-> concat frozen scope scores]
                   -> 3 x (dense+relu+dropout) -> dense(N) -> softmax
* ``recurrent``    embed -> rnn(last state) -> 2 x (dense+relu+dropout)
                   [-> concat similarity-flow(frozen scores) -> dense+relu
                   +dropout] -> dense(N) -> softmax
* ``multikernel``  embed -> parallel convs -> pools [-> concat Siamese
                   cosine scores] -> 2 x (dense+relu+dropout) -> dense(N)
                   -> softmax

Scope representations: the frozen mode scores a document centroid against
cached venue centroids taken from the embedding table with no gradient; the
Siamese mode derives both sides from the shared trainable embedding, so
gradient flows into it through the document and the scope paths alike.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..corpus import Document, VenueProfile
from ..encoders import build_encoder, feature_width, pooled_repr, pooled_repr_backward
from ..neuralcore import (
    CosineHead,
    Dense,
    Dropout,
    Embedding,
    Parameter,
    ReLU,
    SoftmaxXent,
    read_checkpoint,
    write_checkpoint,
)
from ..scopesim import SimilarityFlow
from ..textprep import PAD_ID, UNK_ID, TokenSequence, Vocab
from .config import ModelConfig
from .pipeline import PIPELINE_VERSION, Pipeline, pipeline_for

CHECKPOINT_FORMAT_VERSION = 1


@dataclass
class EncodedDoc:
    """A document after pipeline encoding, ready for the numeric core."""

    ids: np.ndarray
    mask: np.ndarray
    label: int | None = None
    doc_id: str = ""


@dataclass(frozen=True)
class Prediction:
    """Ranked venues with softmax probabilities, descending."""

    ranked: tuple[tuple[str, float], ...]


class VenueRankModel:
    def __init__(self, config: ModelConfig, vocab: Vocab, venues: Sequence[VenueProfile],
                 seed: int = 0, pretrained_rows: np.ndarray | None = None):
        if len(venues) != config.n_venues:
            raise ValueError(
                f"config expects {config.n_venues} venues, got {len(venues)}")
        self.config = config
        self.vocab = vocab
        self.venues = list(venues)
        self.venue_ids = tuple(v.venue_id for v in venues)
        self.pipeline: Pipeline = pipeline_for(config)
        self.history: list[dict] = []
        if config.encoder.kind in ("conv1d_single", "multikernel_conv"):
            widest = max(config.encoder.kernel_sizes)
            if widest > self.pipeline.max_len:
                raise ValueError(
                    f"kernel size {widest} exceeds max sequence length {self.pipeline.max_len}")

        rng = np.random.default_rng(seed)
        n = config.n_venues
        d = config.embed.dim
        self.embedding = Embedding(
            len(vocab), d, rng, "embedding",
            trainable=config.embed.trainable, init=pretrained_rows,
        )
        self.encoder = build_encoder(config.encoder, rng, "encoder")
        feat_w = feature_width(config.encoder)

        self.use_scope = config.combo.use_scope
        self.simflow: SimilarityFlow | None = None
        self.concat_dense: Dense | None = None
        self.concat_dropout: Dropout | None = None

        head = config.head
        if config.variant == "recurrent":
            blocks_in = feat_w
        else:
            blocks_in = feat_w + (n if self.use_scope else 0)

        self.blocks: list[tuple[Dense, Dropout]] = []
        width_in = blocks_in
        for i, width in enumerate(head.widths):
            self.blocks.append((Dense(width_in, width, rng, f"head.fc{i}"), Dropout(head.dropout)))
            width_in = width

        if config.variant == "recurrent" and self.use_scope:
            self.simflow = SimilarityFlow(
                n, rng, widths=head.simflow_widths, dropout_rate=head.simflow_dropout)
            self.concat_dense = Dense(
                width_in + self.simflow.out_width, head.concat_width, rng, "head.concat")
            self.concat_dropout = Dropout(head.concat_dropout)
            width_in = head.concat_width

        self.final = Dense(width_in, n, rng, "head.out")

        # Scope bookkeeping: encoded venue scope texts and the averaging
        # matrix that turns the embedding table into per-venue mean rows.
        self._scope_avg: np.ndarray | None = None      # (N, V), Siamese mean weights
        self._frozen_lists: list[np.ndarray] | None = None  # non-UNK id lists per venue
        self._scope_reprs: np.ndarray | None = None
        self._dscope: np.ndarray | None = None
        self._scope_valid = False
        if self.use_scope:
            self._build_scope_tables()

    # ------------------------------------------------------------------
    # construction helpers
    # ------------------------------------------------------------------

    def _build_scope_tables(self) -> None:
        v_size = len(self.vocab)
        seqs = []
        for venue in self.venues:
            if not venue.aims_scope.strip():
                raise ValueError(f"venue {venue.venue_id!r} has empty aims_scope "
                                 "but the scope feature is enabled")
            cleaned = self.pipeline.clean(venue.aims_scope)
            if not cleaned:
                raise ValueError(f"venue {venue.venue_id!r} aims_scope cleans to nothing")
            seqs.append(self.pipeline.encode_text(cleaned, self.vocab))
        if self.config.scope_mode == "siamese":
            avg = np.zeros((len(self.venues), v_size))
            for row, seq in enumerate(seqs):
                real = [i for i, m in zip(seq.ids, seq.mask) if m]
                for idx in real:
                    avg[row, idx] += 1.0 / len(real)
            self._scope_avg = avg
        else:
            lists = []
            for seq in seqs:
                ids = np.array([i for i, m in zip(seq.ids, seq.mask)
                                if m and i not in (PAD_ID, UNK_ID)], dtype=np.intp)
                if ids.size == 0:
                    raise ValueError("venue scope text has no in-vocabulary tokens")
                lists.append(ids)
            self._frozen_lists = lists

    def parameters(self) -> list[Parameter]:
        params = list(self.embedding.parameters())
        params += self.encoder.parameters()
        if self.simflow is not None:
            params += self.simflow.parameters()
        for dense, _ in self.blocks:
            params += dense.parameters()
        if self.concat_dense is not None:
            params += self.concat_dense.parameters()
        params += self.final.parameters()
        return params

    def zero_grads(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    # ------------------------------------------------------------------
    # scope representations
    # ------------------------------------------------------------------

    def invalidate_scope_cache(self) -> None:
        self._scope_valid = False

    def _refresh_scope_reprs(self) -> None:
        table = self.embedding.table.value
        if self.config.scope_mode == "siamese":
            self._scope_reprs = self._scope_avg @ table
        else:
            self._scope_reprs = np.stack([table[ids].mean(axis=0) for ids in self._frozen_lists])
        self._scope_valid = True

    def begin_batch(self) -> None:
        """Bind scope representations to the current parameters for one step."""
        if not self.use_scope:
            return
        self._refresh_scope_reprs()
        if self.config.scope_mode == "siamese":
            self._dscope = np.zeros_like(self._scope_reprs)

    def end_batch(self) -> None:
        """Flush accumulated Siamese scope gradients into the shared embedding."""
        if (self.use_scope and self.config.scope_mode == "siamese"
                and self.embedding.table.trainable and self._dscope is not None):
            self.embedding.table.grad += self._scope_avg.T @ self._dscope
            self.embedding.table.grad[0] = 0.0
        self._dscope = None

    def _ensure_scope_for_inference(self) -> None:
        if self.use_scope and not self._scope_valid:
            self._refresh_scope_reprs()

    def _frozen_scores(self, ids: np.ndarray, mask: np.ndarray) -> np.ndarray:
        """Constant (no-gradient) cosine scores from embedding-table centroids."""
        table = self.embedding.table.value
        real = (mask > 0) & (ids != PAD_ID) & (ids != UNK_ID)
        if not np.any(real):
            raise ValueError("empty centroid: document has no in-vocabulary tokens")
        centroid = table[ids[real]].mean(axis=0)
        c_norm = np.linalg.norm(centroid)
        row_norms = np.linalg.norm(self._scope_reprs, axis=1)
        if c_norm == 0.0 or np.any(row_norms == 0.0):
            raise ValueError("zero-norm representation in frozen scope scoring")
        return (self._scope_reprs @ centroid) / (row_norms * c_norm)

    # ------------------------------------------------------------------
    # forward / backward
    # ------------------------------------------------------------------

    def forward(self, doc: EncodedDoc, train: bool = False,
                rng: np.random.Generator | None = None) -> tuple[np.ndarray, dict]:
        cache: dict = {}
        emb, emb_cache = self.embedding.forward(doc.ids, doc.mask)
        cache["emb"] = emb_cache
        feat, enc_cache = self.encoder.forward(emb, doc.mask)
        cache["enc"] = enc_cache

        variant = self.config.variant
        scope_vec: np.ndarray | None = None
        if self.use_scope:
            if variant == "multikernel":
                doc_repr = pooled_repr(emb, doc.mask)
                scope_vec, cos_cache = CosineHead.forward(doc_repr, self._scope_reprs)
                cache["cosine"] = cos_cache
            else:
                scope_vec = self._frozen_scores(np.asarray(doc.ids, dtype=np.intp),
                                                np.asarray(doc.mask))
        cache["scope_vec"] = scope_vec

        if variant in ("baseline", "multikernel") and scope_vec is not None:
            x = np.concatenate([feat, scope_vec])
            cache["feat_w"] = feat.shape[0]
        else:
            x = feat
            cache["feat_w"] = feat.shape[0]

        block_caches = []
        for dense, drop in self.blocks:
            y, dense_cache = dense.forward(x)
            a, relu_cache = ReLU.forward(y)
            x, drop_cache = drop.forward(a, train, rng)
            block_caches.append((dense_cache, relu_cache, drop_cache))
        cache["blocks"] = block_caches

        if variant == "recurrent" and self.use_scope:
            sim, sim_cache = self.simflow.forward(scope_vec, train, rng)
            cache["simflow"] = sim_cache
            joined = np.concatenate([x, sim])
            cache["main_w"] = x.shape[0]
            y, cd_cache = self.concat_dense.forward(joined)
            a, relu_cache = ReLU.forward(y)
            x, drop_cache = self.concat_dropout.forward(a, train, rng)
            cache["concat"] = (cd_cache, relu_cache, drop_cache)

        logits, final_cache = self.final.forward(x)
        cache["final"] = final_cache
        cache["emb_shape"] = emb.shape
        cache["mask"] = np.asarray(doc.mask)
        return logits, cache

    def backward(self, dlogits: np.ndarray, cache: dict) -> None:
        grad = self.final.backward(dlogits, cache["final"])
        variant = self.config.variant

        d_scope_vec: np.ndarray | None = None
        if variant == "recurrent" and self.use_scope:
            cd_cache, relu_cache, drop_cache = cache["concat"]
            grad = self.concat_dropout.backward(grad, drop_cache)
            grad = ReLU.backward(grad, relu_cache)
            grad = self.concat_dense.backward(grad, cd_cache)
            main_w = cache["main_w"]
            grad, d_sim = grad[:main_w], grad[main_w:]
            self.simflow.backward(d_sim, cache["simflow"])
            # frozen scores are constants; nothing flows past the similarity flow

        for (dense, drop), (dense_cache, relu_cache, drop_cache) in zip(
                reversed(self.blocks), reversed(cache["blocks"])):
            grad = drop.backward(grad, drop_cache)
            grad = ReLU.backward(grad, relu_cache)
            grad = dense.backward(grad, dense_cache)

        if variant in ("baseline", "multikernel") and cache["scope_vec"] is not None:
            feat_w = cache["feat_w"]
            grad, d_scope_vec = grad[:feat_w], grad[feat_w:]

        demb = self.encoder.backward(grad, cache["enc"])

        if variant == "multikernel" and d_scope_vec is not None:
            d_doc_repr, d_scopes = CosineHead.backward(d_scope_vec, cache["cosine"])
            demb += pooled_repr_backward(d_doc_repr, cache["mask"], cache["emb_shape"])
            self._dscope += d_scopes

        self.embedding.backward(demb, cache["emb"])

    def loss_and_grad(self, doc: EncodedDoc, train: bool = True,
                      rng: np.random.Generator | None = None) -> float:
        if doc.label is None:
            raise ValueError(f"document {doc.doc_id!r} has no label")
        logits, cache = self.forward(doc, train=train, rng=rng)
        loss, probs = SoftmaxXent.forward(logits, doc.label)
        self.backward(SoftmaxXent.backward(probs, doc.label), cache)
        return loss

    # ------------------------------------------------------------------
    # inference
    # ------------------------------------------------------------------

    def encode(self, doc: Document) -> EncodedDoc:
        seq = self.pipeline.encode_doc(doc, self.vocab)
        return self._from_sequence(seq, doc)

    def _from_sequence(self, seq: TokenSequence, doc: Document | None = None) -> EncodedDoc:
        label = None
        if doc is not None and doc.venue_id is not None:
            try:
                label = self.venue_ids.index(doc.venue_id)
            except ValueError:
                raise ValueError(f"document {doc.id!r} labels unknown venue {doc.venue_id!r}")
        return EncodedDoc(
            ids=np.array(seq.ids, dtype=np.intp),
            mask=np.array(seq.mask, dtype=np.float64),
            label=label,
            doc_id=doc.id if doc is not None else "",
        )

    def predict_proba(self, encoded: EncodedDoc) -> tuple[np.ndarray, np.ndarray | None]:
        """Softmax probabilities over all venues plus the scope-score vector."""
        self._ensure_scope_for_inference()
        logits, cache = self.forward(encoded, train=False)
        shifted = logits - logits.max()
        exp = np.exp(shifted)
        return exp / exp.sum(), cache["scope_vec"]

    def predict_topk(self, doc: Document, k: int) -> Prediction:
        if not 1 <= k <= self.config.n_venues:
            raise ValueError(f"k={k} out of range [1, {self.config.n_venues}]")
        probs, _ = self.predict_proba(self.encode(doc))
        order = sorted(range(len(probs)), key=lambda i: (-probs[i], self.venue_ids[i]))
        return Prediction(tuple((self.venue_ids[i], float(probs[i])) for i in order[:k]))

    def rank_all(self, encoded: EncodedDoc) -> list[str]:
        probs, _ = self.predict_proba(encoded)
        order = sorted(range(len(probs)), key=lambda i: (-probs[i], self.venue_ids[i]))
        return [self.venue_ids[i] for i in order]


def build_model(config: ModelConfig, vocab: Vocab, venues: Sequence[VenueProfile],
                seed: int = 0) -> VenueRankModel:
    """Initialize an untrained model, loading pretrained vectors when configured."""
    pretrained_rows = None
    if config.embed.pretrained_path:
        from ..embed import load_vectors
        from ..neuralcore.tensor import embedding_init

        table = load_vectors(config.embed.pretrained_path)
        if table.dim != config.embed.dim:
            raise ValueError(
                f"pretrained vectors have dim {table.dim}, config says {config.embed.dim}")
        rng = np.random.default_rng(seed)
        pretrained_rows = embedding_init(rng, (len(vocab), config.embed.dim))
        for token, row in table.token_index.items():
            idx = vocab.token_to_id.get(token)
            if idx is not None:
                pretrained_rows[idx] = table.vectors[row]
    return VenueRankModel(config, vocab, venues, seed=seed, pretrained_rows=pretrained_rows)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def save_model(model: VenueRankModel, path: str | Path) -> None:
    header = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "pipeline_version": model.pipeline.version,
        "config": model.config.to_dict(),
        "vocab": model.vocab.id_to_token,
        "venues": [
            {"venue_id": v.venue_id, "name": v.name, "aims_scope": v.aims_scope}
            for v in model.venues
        ],
        "history": model.history,
    }
    write_checkpoint(path, header, model.parameters())


def load_model(path: str | Path) -> VenueRankModel:
    header, arrays = read_checkpoint(path)
    if header.get("pipeline_version") != PIPELINE_VERSION:
        raise ValueError(
            f"checkpoint pipeline version {header.get('pipeline_version')} "
            f"does not match this build ({PIPELINE_VERSION})")
    config = ModelConfig.from_dict(header["config"])
    vocab = Vocab(header["vocab"][4:])
    venues = [VenueProfile(v["venue_id"], v["name"], v["aims_scope"])
              for v in header["venues"]]
    model = VenueRankModel(config, vocab, venues, seed=0)
    model.history = header.get("history", [])
    for p in model.parameters():
        if p.name not in arrays:
            raise ValueError(f"checkpoint missing parameter {p.name!r}")
        if arrays[p.name].shape != p.value.shape:
            raise ValueError(f"checkpoint shape mismatch for {p.name!r}")
        p.value = arrays[p.name]
    model.invalidate_scope_cache()
    return model


def model_id_for(path: str | Path) -> str:
    digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
    return digest[:12]


def config_hash(config: ModelConfig) -> str:
    blob = json.dumps(config.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
