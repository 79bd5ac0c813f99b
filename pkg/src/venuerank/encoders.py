"""Encoder blocks: map an embedded, masked token sequence to a fixed vector.

All encoders are mask-aware. The validity mask is a prefix of ones, so the
real tokens occupy rows ``[0, L)``; encoders only look at that prefix, which
makes their output invariant to the amount of trailing padding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .neuralcore import Conv1D, GlobalMaxPool, Parameter, ReLU
from .neuralcore.recurrent import GRU, LSTM, Bidirectional

ENCODER_KINDS = ("conv1d_single", "lstm", "bilstm", "gru", "bigru", "multikernel_conv")


@dataclass(frozen=True)
class EncoderSpec:
    """Architecture family plus its size hyperparameters."""

    kind: str
    embed_dim: int
    units: int = 100
    filters: int = 200
    kernel_sizes: tuple[int, ...] = (2, 3, 4)

    def __post_init__(self) -> None:
        if self.kind not in ENCODER_KINDS:
            raise ValueError(f"unknown encoder kind {self.kind!r}")
        if self.kind in ("lstm", "bilstm", "gru", "bigru") and self.units < 1:
            raise ValueError("recurrent encoders need units >= 1")
        if self.kind == "multikernel_conv" and not self.kernel_sizes:
            raise ValueError("multikernel encoder needs at least one kernel size")
        if self.kind in ("conv1d_single", "multikernel_conv"):
            if any(k < 1 for k in self.kernel_sizes):
                raise ValueError("kernel sizes must be >= 1")
            if self.filters < 1:
                raise ValueError("conv encoders need filters >= 1")
        object.__setattr__(self, "kernel_sizes", tuple(self.kernel_sizes))


def feature_width(spec: EncoderSpec) -> int:
    """Output width as a pure function of the spec."""
    if spec.kind == "conv1d_single":
        return spec.filters
    if spec.kind == "multikernel_conv":
        return spec.filters * len(spec.kernel_sizes)
    if spec.kind in ("lstm", "gru"):
        return spec.units
    return 2 * spec.units  # bilstm / bigru


def _real_length(mask: np.ndarray) -> int:
    n = int(np.asarray(mask).sum())
    if n == 0:
        raise ValueError("all-padding input: mask has no real positions")
    return n


class ConvEncoder:
    """Parallel valid convolutions + ReLU + global max pooling, concatenated.

    Pooling runs over windows that touch at least one real token; a real
    prefix shorter than a kernel is zero-extended to one window.
    """

    def __init__(self, spec: EncoderSpec, rng: np.random.Generator, name: str = "encoder"):
        kernel_sizes = spec.kernel_sizes if spec.kind == "multikernel_conv" else spec.kernel_sizes[:1]
        self.spec = spec
        self.convs = [
            Conv1D(k, spec.embed_dim, spec.filters, rng, f"{name}.conv{k}")
            for k in kernel_sizes
        ]

    def parameters(self) -> list[Parameter]:
        return [p for conv in self.convs for p in conv.parameters()]

    def forward(self, emb: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, tuple]:
        n_real = _real_length(mask)
        segments = []
        caches = []
        for conv in self.convs:
            k = conv.kernel_size
            x = emb[:max(n_real, k)]  # zero rows extend a too-short prefix
            y, conv_cache = conv.forward(x)
            a, relu_cache = ReLU.forward(y)
            pooled, pool_cache = GlobalMaxPool.forward(a)
            segments.append(pooled)
            caches.append((conv_cache, relu_cache, pool_cache, x.shape[0]))
        return np.concatenate(segments), (caches, n_real, emb.shape)

    def backward(self, grad: np.ndarray, cache: tuple) -> np.ndarray:
        caches, n_real, emb_shape = cache
        demb = np.zeros(emb_shape)
        f = self.spec.filters
        for i, conv in enumerate(self.convs):
            conv_cache, relu_cache, pool_cache, x_len = caches[i]
            seg = grad[i * f:(i + 1) * f]
            da = GlobalMaxPool.backward(seg, pool_cache)
            dy = ReLU.backward(da, relu_cache)
            dx = conv.backward(dy, conv_cache)
            demb[:x_len] += dx
        demb[n_real:] = 0.0  # zero-extension rows carry no gradient
        return demb


class RecurrentEncoder:
    """LSTM/GRU (optionally bidirectional) read of the real prefix; last state."""

    def __init__(self, spec: EncoderSpec, rng: np.random.Generator, name: str = "encoder"):
        self.spec = spec
        if spec.kind == "lstm":
            self.cell = LSTM(spec.embed_dim, spec.units, rng, f"{name}.lstm")
        elif spec.kind == "gru":
            self.cell = GRU(spec.embed_dim, spec.units, rng, f"{name}.gru")
        elif spec.kind == "bilstm":
            self.cell = Bidirectional("lstm", spec.embed_dim, spec.units, rng, f"{name}.bilstm")
        elif spec.kind == "bigru":
            self.cell = Bidirectional("gru", spec.embed_dim, spec.units, rng, f"{name}.bigru")
        else:
            raise ValueError(f"not a recurrent kind: {spec.kind!r}")

    def parameters(self) -> list[Parameter]:
        return self.cell.parameters()

    def forward(self, emb: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, tuple]:
        n_real = _real_length(mask)
        x = emb[:n_real]
        seq, cell_cache = self.cell.forward(x)
        u = self.spec.units
        if isinstance(self.cell, Bidirectional):
            out = np.concatenate([seq[-1, :u], seq[0, u:]])
        else:
            out = seq[-1]
        return out, (cell_cache, n_real, emb.shape, seq.shape)

    def backward(self, grad: np.ndarray, cache: tuple) -> np.ndarray:
        cell_cache, n_real, emb_shape, seq_shape = cache
        grad_seq = np.zeros(seq_shape)
        u = self.spec.units
        if isinstance(self.cell, Bidirectional):
            grad_seq[-1, :u] = grad[:u]
            grad_seq[0, u:] = grad[u:]
        else:
            grad_seq[-1] = grad
        dx = self.cell.backward(grad_seq, cell_cache)
        demb = np.zeros(emb_shape)
        demb[:n_real] = dx
        return demb


def build_encoder(spec: EncoderSpec, rng: np.random.Generator, name: str = "encoder"):
    if spec.kind in ("conv1d_single", "multikernel_conv"):
        return ConvEncoder(spec, rng, name)
    return RecurrentEncoder(spec, rng, name)


def pooled_repr(emb: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Masked mean of embedding rows: the single-vector Siamese representation."""
    n_real = _real_length(mask)
    return emb[:n_real].mean(axis=0)


def pooled_repr_backward(grad: np.ndarray, mask: np.ndarray, emb_shape: tuple) -> np.ndarray:
    n_real = _real_length(mask)
    demb = np.zeros(emb_shape)
    demb[:n_real] = grad / n_real
    return demb
