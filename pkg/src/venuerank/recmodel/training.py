"""Minibatch training with validation tracking and early stopping.

Deterministic under the config seed: one generator drives epoch shuffles and
dropout masks, batches are processed in shuffle order, and gradients are
averaged in fixed sample order.
"""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from ..corpus import CorpusSplit, Document
from ..neuralcore import make_optimizer
from ..neuralcore.tensor import NumericsError
from .model import EncodedDoc, VenueRankModel

log = logging.getLogger(__name__)


def encode_dataset(model: VenueRankModel, docs: Sequence[Document],
                   require_labels: bool = True) -> list[EncodedDoc]:
    encoded = []
    for doc in docs:
        enc = model.encode(doc)
        if require_labels and enc.label is None:
            raise ValueError(f"document {doc.id!r} has no venue label")
        encoded.append(enc)
    return encoded


def _top1_accuracy(model: VenueRankModel, samples: Sequence[EncodedDoc]) -> float:
    if not samples:
        return 0.0
    hits = 0
    for s in samples:
        if model.rank_all(s)[0] == model.venue_ids[s.label]:
            hits += 1
    return hits / len(samples)


def train(model: VenueRankModel, split: CorpusSplit) -> list[dict]:
    """Optimize softmax cross-entropy; keep the best-validation parameters.

    Returns the per-epoch history (also stored on ``model.history``).
    """
    cfg = model.config.train
    train_docs = encode_dataset(model, split.train)
    val_docs = encode_dataset(model, split.validation)
    if not train_docs:
        raise ValueError("empty training split")

    optimizer = make_optimizer(cfg.optimizer, cfg.learning_rate)
    rng = np.random.default_rng(cfg.seed)
    params = model.parameters()

    history: list[dict] = []
    best_val = -1.0
    best_state: dict[str, np.ndarray] | None = None
    best_epoch = -1
    stale = 0

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(train_docs))
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            model.zero_grads()
            model.begin_batch()
            batch_loss = 0.0
            for i in batch:
                batch_loss += model.loss_and_grad(train_docs[i], train=True, rng=rng)
            model.end_batch()
            if not np.isfinite(batch_loss):
                raise NumericsError(
                    f"non-finite loss at epoch {epoch}, batch {start // cfg.batch_size}")
            for p in params:
                p.grad /= len(batch)
            optimizer.step(params)
            model.invalidate_scope_cache()
            epoch_loss += batch_loss
        val_acc = _top1_accuracy(model, val_docs)
        record = {
            "epoch": epoch,
            "train_loss": epoch_loss / len(train_docs),
            "val_accuracy_at_1": val_acc,
        }
        history.append(record)
        log.info("epoch %d: loss %.4f, val@1 %.4f", epoch, record["train_loss"], val_acc)

        if val_acc > best_val:
            best_val = val_acc
            best_epoch = epoch
            best_state = {p.name: p.value.copy() for p in params}
            stale = 0
        else:
            stale += 1
            if stale > cfg.patience:
                log.info("early stop at epoch %d (best %d)", epoch, best_epoch)
                break

    if best_state is not None:
        for p in params:
            p.value = best_state[p.name]
        model.invalidate_scope_cache()
    for record in history:
        record["best"] = record["epoch"] == best_epoch
    model.history = history
    return history


def initial_loss(model: VenueRankModel, docs: Sequence[Document], limit: int = 64) -> float:
    """Mean cross-entropy at the current parameters, no updates."""
    from ..neuralcore import SoftmaxXent

    samples = encode_dataset(model, docs[:limit])
    model._ensure_scope_for_inference()
    total = 0.0
    for s in samples:
        logits, _ = model.forward(s, train=False)
        loss, _ = SoftmaxXent.forward(logits, s.label)
        total += loss
    return total / len(samples)
