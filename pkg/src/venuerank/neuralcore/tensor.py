"""Tensor conventions, finiteness guards, parameters, and initializers.

Tensors are numpy ``float64`` arrays throughout (row-major). Every layer
output passes through :func:`ensure_finite`; a NaN or Inf anywhere is a hard
error rather than a silent corruption.
"""

from __future__ import annotations

import numpy as np


class NumericsError(ValueError):
    """A non-finite value escaped an operation."""


def as_tensor(values, shape=None) -> np.ndarray:
    """Coerce to a float64 array, optionally reshaping flat row-major values."""
    arr = np.asarray(values, dtype=np.float64)
    if shape is not None:
        expected = int(np.prod(shape))
        if arr.size != expected:
            raise ValueError(f"value count {arr.size} does not match shape {tuple(shape)}")
        arr = arr.reshape(shape)
    return arr


def ensure_finite(arr: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NumericsError(f"non-finite values in {what}")
    return arr


class Parameter:
    """A named learnable array with a gradient accumulator."""

    __slots__ = ("name", "value", "grad", "trainable")

    def __init__(self, name: str, value, trainable: bool = True):
        self.name = name
        self.value = as_tensor(value)
        self.grad = np.zeros_like(self.value)
        self.trainable = trainable

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.value.shape})"


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, ...],
                   fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def embedding_init(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    return rng.uniform(-0.05, 0.05, size=shape)
