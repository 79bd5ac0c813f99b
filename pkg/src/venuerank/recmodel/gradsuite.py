"""Tiny-dimension model fixtures and gradient verification for each variant.

Dimensions are deliberately small (M=6, d=8, N=4, F=3, u=5) so the central
finite differences over every architecture stay fast.

Frozen scope scores are defined as constants of the graph (no gradient), a
stop-gradient finite differences cannot express, so the baseline/recurrent
scope-on fixtures use a non-trainable embedding; the Siamese multikernel
path is fully differentiable and is checked end to end, embedding included.
"""

from __future__ import annotations

import numpy as np

from ..corpus import synth_corpus
from ..neuralcore import GradReport, SoftmaxXent, grad_check
from ..textprep import build_vocab
from .config import MODEL_KINDS, EmbedSpec, HeadConfig, TrainSpec, default_config
from .model import VenueRankModel, build_model
from .pipeline import pipeline_for

TINY = {"max_len": 6, "embed_dim": 8, "n_venues": 4, "filters": 3, "units": 5}

_TINY_HEADS = {
    "baseline": HeadConfig(widths=(7, 6, 5), dropout=0.2),
    "recurrent": HeadConfig(widths=(7, 6), dropout=0.2, concat_width=6,
                            simflow_widths=(9, 8, 7)),
    "multikernel": HeadConfig(widths=(7, 6), dropout=0.2),
}


def tiny_fixture(kind: str, use_scope: bool = True, seed: int = 0,
                 trainable_embedding: bool | None = None):
    """A tiny built model plus one labeled encoded document.

    Parameter values are re-drawn at O(1) scale: at the production init the
    recurrent paths sit so close to zero that their true gradients fall under
    the relative-error floor and finite-difference rounding noise dominates.
    A generic point keeps the comparison meaningful.
    """
    variant = MODEL_KINDS[kind][0]
    if trainable_embedding is None:
        trainable_embedding = not (use_scope and variant in ("baseline", "recurrent"))
    combo = "TAKS" if use_scope else "TAK"
    config = default_config(
        kind,
        combo,
        TINY["n_venues"],
        embed_dim=TINY["embed_dim"],
        units=TINY["units"],
        filters=TINY["filters"],
        kernel_sizes=(2, 3, 4) if variant == "multikernel" else (2,),
        head=_TINY_HEADS[variant],
        embed=EmbedSpec(dim=TINY["embed_dim"], trainable=trainable_embedding),
        train=TrainSpec(seed=seed),
        max_len=TINY["max_len"],
    )
    docs, venues = synth_corpus(TINY["n_venues"], 3, vocab_size=48,
                                signal_strength=0.9, seed=seed)
    pipe = pipeline_for(config)
    vocab = build_vocab([pipe.doc_text(d) for d in docs])
    model = build_model(config, vocab, venues, seed=seed)
    redraw = np.random.default_rng(seed + 10_000)
    for p in model.parameters():
        p.value = redraw.normal(0.0, 0.4, size=p.value.shape)
    model.embedding.table.value[0] = 0.0  # keep the PAD row pinned
    model.invalidate_scope_cache()
    sample = model.encode(docs[seed % len(docs)])
    return model, sample


def grad_check_model(model: VenueRankModel, sample, epsilon: float = 1e-5,
                     max_entries_per_param: int = 200,
                     rng: np.random.Generator | None = None,
                     retry_epsilon: float | None = 3e-4) -> GradReport:
    """Finite-difference check of the full architecture on one sample.

    Dropout runs in inference mode so both evaluations are deterministic;
    scope representations are rebound to the (perturbed) parameters on every
    evaluation.
    """

    def loss_fn() -> float:
        model.begin_batch()
        logits, _ = model.forward(sample, train=False)
        loss, _ = SoftmaxXent.forward(logits, sample.label)
        return loss

    def grad_fn() -> float:
        model.zero_grads()
        model.begin_batch()
        loss = model.loss_and_grad(sample, train=False)
        model.end_batch()
        return loss

    params = [p for p in model.parameters() if p.trainable]
    return grad_check(loss_fn, grad_fn, params, epsilon=epsilon,
                      max_entries_per_param=max_entries_per_param, rng=rng,
                      retry_epsilon=retry_epsilon)


def check_variant(kind: str, seed: int = 0, epsilon: float = 1e-5) -> GradReport:
    model, sample = tiny_fixture(kind, use_scope=True, seed=seed)
    return grad_check_model(model, sample, epsilon=epsilon,
                            rng=np.random.default_rng(seed))
