"""SGD and Adam over named parameters."""

from __future__ import annotations

import numpy as np

from .tensor import Parameter, ensure_finite


class SGD:
    def __init__(self, lr: float = 0.01):
        self.lr = lr

    def step(self, params: list[Parameter]) -> None:
        for p in params:
            if not p.trainable:
                continue
            ensure_finite(p.grad, f"gradient of {p.name}")
            p.value -= self.lr * p.grad


class Adam:
    """Standard Adam with bias correction."""

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self, params: list[Parameter]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.t
        bc2 = 1.0 - b2 ** self.t
        for p in params:
            if not p.trainable:
                continue
            ensure_finite(p.grad, f"gradient of {p.name}")
            m = self._m.setdefault(p.name, np.zeros_like(p.value))
            v = self._v.setdefault(p.name, np.zeros_like(p.value))
            m *= b1
            m += (1.0 - b1) * p.grad
            v *= b2
            v += (1.0 - b2) * p.grad ** 2
            # p -= lr * (m/bc1) / (sqrt(v/bc2) + eps), with in-place temporaries
            denom = np.sqrt(v)
            denom /= np.sqrt(bc2)
            denom += self.eps
            update = m / denom
            update *= self.lr / bc1
            p.value -= update


def make_optimizer(kind: str, lr: float | None = None) -> SGD | Adam:
    if kind == "sgd":
        return SGD(lr if lr is not None else 0.01)
    if kind == "adam":
        return Adam(lr if lr is not None else 1e-3)
    raise ValueError(f"unknown optimizer kind {kind!r}")
