"""Finetune and generate against wattscope dataset manifests."""

from .config import HarnessConfig
from .generate import GenerateResult, generate
from .manifest import ManifestSchemaMismatch, read_manifest
from .model import MissingCheckpoint, ModelLoadFailure
from .train import TrainResult, finetune

__version__ = "0.1.0"

__all__ = [
    "HarnessConfig",
    "ManifestSchemaMismatch",
    "MissingCheckpoint",
    "ModelLoadFailure",
    "TrainResult",
    "GenerateResult",
    "read_manifest",
    "finetune",
    "generate",
    "__version__",
]
