"""Model assembly, training, prediction, and checkpoints."""

from .config import (
    MODEL_KINDS,
    VARIANTS,
    EmbedSpec,
    HeadConfig,
    ModelConfig,
    TrainSpec,
    default_config,
)
from .model import (
    EncodedDoc,
    Prediction,
    VenueRankModel,
    build_model,
    config_hash,
    load_model,
    model_id_for,
    save_model,
)
from .pipeline import PIPELINE_VERSION, Pipeline, pipeline_for
from .training import encode_dataset, initial_loss, train

__all__ = [
    "MODEL_KINDS", "VARIANTS", "EmbedSpec", "HeadConfig", "ModelConfig",
    "TrainSpec", "default_config",
    "EncodedDoc", "Prediction", "VenueRankModel", "build_model", "config_hash",
    "load_model", "model_id_for", "save_model",
    "PIPELINE_VERSION", "Pipeline", "pipeline_for",
    "encode_dataset", "initial_loss", "train",
]
