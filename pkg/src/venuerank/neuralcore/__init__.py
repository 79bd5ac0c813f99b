"""Minimal differentiable-layer engine: tensors, layers, optimizers, checks."""

from .tensor import (
    NumericsError,
    Parameter,
    as_tensor,
    embedding_init,
    ensure_finite,
    glorot_uniform,
)
from .layers import (
    Conv1D,
    CosineHead,
    Dense,
    Dropout,
    Embedding,
    GlobalMaxPool,
    ReLU,
    SoftmaxXent,
    conv1d_forward,
    dense_forward,
    dropout,
    global_max_pool,
    softmax_xent,
)
from .recurrent import (
    GRU,
    LSTM,
    Bidirectional,
    CellParams,
    bidirectional_forward,
    gru_forward,
    lstm_forward,
)
from .optim import SGD, Adam, make_optimizer
from .gradcheck import GradReport, grad_check, relative_error
from .checkpoint import CheckpointError, read_checkpoint, write_checkpoint

__all__ = [
    "NumericsError", "Parameter", "as_tensor", "embedding_init", "ensure_finite",
    "glorot_uniform",
    "Conv1D", "CosineHead", "Dense", "Dropout", "Embedding", "GlobalMaxPool",
    "ReLU", "SoftmaxXent", "conv1d_forward", "dense_forward", "dropout",
    "global_max_pool", "softmax_xent",
    "GRU", "LSTM", "Bidirectional", "CellParams", "bidirectional_forward",
    "gru_forward", "lstm_forward",
    "SGD", "Adam", "make_optimizer",
    "GradReport", "grad_check", "relative_error",
    "CheckpointError", "read_checkpoint", "write_checkpoint",
]
