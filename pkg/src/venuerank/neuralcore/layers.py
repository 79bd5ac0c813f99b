"""Feed-forward layers with hand-written forward and backward passes.

Every layer follows the same protocol: ``forward`` is pure and returns
``(output, cache)``; ``backward(grad_out, cache)`` returns the gradient with
respect to the input and accumulates parameter gradients in place. Instances
are single-threaded for training; inference (forward only) is safe to share.
"""

from __future__ import annotations

import numpy as np

from .tensor import Parameter, ensure_finite, glorot_uniform

# ---------------------------------------------------------------------------
# Functional forms (the oracle-checked primitives)
# ---------------------------------------------------------------------------


def dense_forward(x: np.ndarray, W: np.ndarray, b: np.ndarray) -> np.ndarray:
    """x @ W + b for x of shape (in,) or (*, in)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != W.shape[0]:
        raise ValueError(f"dense shape mismatch: input width {x.shape[-1]} vs W {W.shape}")
    if b.shape != (W.shape[1],):
        raise ValueError(f"dense bias shape {b.shape} does not match W {W.shape}")
    return ensure_finite(x @ W + b, "dense output")


def conv1d_forward(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray | None = None) -> np.ndarray:
    """Valid 1-d convolution: out[t, f] = sum_{i,c} x[t+i, c] * kernels[i, c, f] + bias[f]."""
    x = np.asarray(x, dtype=np.float64)
    k, d, n_filters = kernels.shape
    if x.ndim != 2 or x.shape[1] != d:
        raise ValueError(f"conv1d input shape {x.shape} does not match kernel depth {d}")
    m = x.shape[0]
    if m < k:
        raise ValueError(f"conv1d input length {m} shorter than kernel size {k}")
    windows = np.lib.stride_tricks.sliding_window_view(x, k, axis=0)  # (T, d, k)
    # The reshape can come back as an overlapping strided view BLAS cannot
    # take; force a contiguous im2col buffer.
    flat = np.ascontiguousarray(windows.transpose(0, 2, 1)).reshape(m - k + 1, k * d)
    out = flat @ kernels.reshape(k * d, n_filters)
    if bias is not None:
        out = out + bias
    return ensure_finite(out, "conv1d output")


def global_max_pool(x: np.ndarray) -> np.ndarray:
    """Per-filter maximum over the time axis."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError(f"global_max_pool needs a nonempty (T, F) input, got {x.shape}")
    return x.max(axis=0)


def softmax_xent(logits: np.ndarray, label: int) -> tuple[float, np.ndarray]:
    """Numerically stable softmax probabilities and cross-entropy loss."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1 or logits.shape[0] < 2:
        raise ValueError("softmax_xent needs a logit vector with >= 2 classes")
    if not 0 <= label < logits.shape[0]:
        raise ValueError(f"label {label} out of range for {logits.shape[0]} classes")
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    total = exp.sum()
    probs = exp / total
    loss = float(np.log(total) - shifted[label])
    ensure_finite(probs, "softmax probabilities")
    return loss, probs


def dropout(x: np.ndarray, rate: float, mode: str = "infer",
            seed: int | np.random.Generator | None = None) -> np.ndarray:
    """Inverted dropout: training zeroes and rescales, inference is identity."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate {rate} outside [0, 1)")
    if mode == "infer" or rate == 0.0:
        return x
    if mode != "train":
        raise ValueError(f"unknown dropout mode {mode!r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    keep = rng.random(x.shape) >= rate
    return x * keep / (1.0 - rate)


# ---------------------------------------------------------------------------
# Layer classes
# ---------------------------------------------------------------------------


class Dense:
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, name: str):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.W = Parameter(f"{name}.W", glorot_uniform(rng, (in_dim, out_dim), in_dim, out_dim))
        self.b = Parameter(f"{name}.b", np.zeros(out_dim))

    def parameters(self) -> list[Parameter]:
        return [self.W, self.b]

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return dense_forward(x, self.W.value, self.b.value), x

    def backward(self, grad: np.ndarray, x: np.ndarray) -> np.ndarray:
        if x.ndim == 1:
            self.W.grad += np.outer(x, grad)
            self.b.grad += grad
        else:
            self.W.grad += x.reshape(-1, self.in_dim).T @ grad.reshape(-1, self.out_dim)
            self.b.grad += grad.reshape(-1, self.out_dim).sum(axis=0)
        return grad @ self.W.value.T


class ReLU:
    @staticmethod
    def forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return np.maximum(x, 0.0), x

    @staticmethod
    def backward(grad: np.ndarray, x: np.ndarray) -> np.ndarray:
        return grad * (x > 0.0)


class Dropout:
    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate {rate} outside [0, 1)")
        self.rate = rate

    def forward(self, x: np.ndarray, train: bool,
                rng: np.random.Generator | None) -> tuple[np.ndarray, np.ndarray | None]:
        if not train or self.rate == 0.0:
            return x, None
        if rng is None:
            raise ValueError("training-mode dropout needs a seeded generator")
        scale = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        return x * scale, scale

    def backward(self, grad: np.ndarray, scale: np.ndarray | None) -> np.ndarray:
        return grad if scale is None else grad * scale


class Conv1D:
    """Valid (unpadded) 1-d convolution over a (M, d) sequence."""

    def __init__(self, kernel_size: int, in_dim: int, n_filters: int,
                 rng: np.random.Generator, name: str):
        self.kernel_size = kernel_size
        self.in_dim = in_dim
        self.n_filters = n_filters
        fan_in = kernel_size * in_dim
        self.kernels = Parameter(
            f"{name}.kernels",
            glorot_uniform(rng, (kernel_size, in_dim, n_filters), fan_in, kernel_size * n_filters),
        )
        self.bias = Parameter(f"{name}.bias", np.zeros(n_filters))

    def parameters(self) -> list[Parameter]:
        return [self.kernels, self.bias]

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return conv1d_forward(x, self.kernels.value, self.bias.value), x

    def backward(self, grad: np.ndarray, x: np.ndarray) -> np.ndarray:
        k, d, f = self.kernels.value.shape
        t = x.shape[0] - k + 1
        windows = np.lib.stride_tricks.sliding_window_view(x, k, axis=0)
        flat = np.ascontiguousarray(windows.transpose(0, 2, 1)).reshape(t, k * d)
        self.kernels.grad += (flat.T @ grad).reshape(k, d, f)
        self.bias.grad += grad.sum(axis=0)
        d_windows = (grad @ self.kernels.value.reshape(k * d, f).T).reshape(t, k, d)
        dx = np.zeros_like(x)
        for i in range(k):
            dx[i:i + t] += d_windows[:, i, :]
        return dx


class GlobalMaxPool:
    """Max over time; gradient routes to the first argmax row per filter."""

    @staticmethod
    def forward(x: np.ndarray) -> tuple[np.ndarray, tuple]:
        out = global_max_pool(x)
        return out, (np.argmax(x, axis=0), x.shape)

    @staticmethod
    def backward(grad: np.ndarray, cache: tuple) -> np.ndarray:
        argmax, shape = cache
        dx = np.zeros(shape)
        dx[argmax, np.arange(shape[1])] = grad
        return dx


class SoftmaxXent:
    """Fused softmax + cross-entropy head."""

    @staticmethod
    def forward(logits: np.ndarray, label: int) -> tuple[float, np.ndarray]:
        return softmax_xent(logits, label)

    @staticmethod
    def backward(probs: np.ndarray, label: int, grad_loss: float = 1.0) -> np.ndarray:
        d = probs.copy()
        d[label] -= 1.0
        return d * grad_loss


class Embedding:
    """Trainable id -> row lookup; PAD (row 0) is pinned to zero."""

    def __init__(self, vocab_size: int, dim: int, rng: np.random.Generator,
                 name: str = "embedding", trainable: bool = True,
                 init: np.ndarray | None = None):
        from .tensor import embedding_init

        table = embedding_init(rng, (vocab_size, dim)) if init is None else np.array(init, dtype=np.float64)
        if table.shape != (vocab_size, dim):
            raise ValueError(f"embedding init shape {table.shape} != ({vocab_size}, {dim})")
        table[0] = 0.0
        self.table = Parameter(f"{name}.table", table, trainable=trainable)
        self.dim = dim

    def parameters(self) -> list[Parameter]:
        return [self.table]

    def forward(self, ids: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, tuple]:
        ids = np.asarray(ids, dtype=np.intp)
        mask = np.asarray(mask, dtype=np.float64)
        out = self.table.value[ids] * mask[:, None]
        return out, (ids, mask)

    def backward(self, grad: np.ndarray, cache: tuple) -> None:
        if not self.table.trainable:
            return
        ids, mask = cache
        real = mask > 0
        np.add.at(self.table.grad, ids[real], grad[real])
        self.table.grad[0] = 0.0  # PAD row stays pinned


class CosineHead:
    """Cosine similarity of one vector against every row of a matrix.

    Differentiable on both sides; this is the joint where the Siamese scope
    branch meets the main flow.
    """

    @staticmethod
    def forward(doc: np.ndarray, scopes: np.ndarray) -> tuple[np.ndarray, tuple]:
        doc_norm = float(np.linalg.norm(doc))
        scope_norms = np.linalg.norm(scopes, axis=1)
        if doc_norm == 0.0:
            raise ValueError("cosine head: zero-norm document representation")
        if np.any(scope_norms == 0.0):
            raise ValueError("cosine head: zero-norm scope representation")
        scores = (scopes @ doc) / (scope_norms * doc_norm)
        return scores, (doc, scopes, doc_norm, scope_norms, scores)

    @staticmethod
    def backward(grad: np.ndarray, cache: tuple) -> tuple[np.ndarray, np.ndarray]:
        doc, scopes, doc_norm, scope_norms, scores = cache
        inv = 1.0 / (scope_norms * doc_norm)
        # d s_j / d doc = scopes_j / (|doc||scope_j|) - s_j * doc / |doc|^2
        d_doc = (grad * inv) @ scopes - (grad @ scores) * doc / (doc_norm ** 2)
        # d s_j / d scope_j = doc / (|doc||scope_j|) - s_j * scope_j / |scope_j|^2
        d_scopes = np.outer(grad * inv, doc) - (grad * scores / scope_norms ** 2)[:, None] * scopes
        return d_doc, d_scopes
