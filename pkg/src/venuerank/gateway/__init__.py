"""CLI and HTTP service over trained models."""

from .cli import main
from .service import MODEL_PATH_ENV, RecommendService, make_server, recommend_payload, serve

__all__ = ["main", "MODEL_PATH_ENV", "RecommendService", "make_server",
           "recommend_payload", "serve"]
