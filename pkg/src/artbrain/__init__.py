"""Detection and attribution of AI-generated artwork.

A channel-attention convolutional classifier over 30 classes (3 sources x
10 art styles), with dataset tooling, training, saliency overlays, an HTTP
service, and a command-line interface.
"""

from .archive import WeightArchive, load_archive, save_archive
from .errors import (
    AlignmentError,
    ArchiveError,
    ArtbrainError,
    ConfigurationError,
    DataError,
    FormatError,
    NumericError,
    StateError,
)
from .estimator import ArtClassifier
from .labels import (
    MAPPING_VERSION,
    NUM_CLASSES,
    NUM_SOURCES,
    NUM_STYLES,
    Source,
    Style,
    class_of,
    parts_of,
    source_marginals,
    style_marginals,
)
from .model import (
    AttentionConvNeXt,
    ModelConfig,
    Prediction,
    Predictor,
    build_network,
    prediction_from_probs,
)
from .preprocess import PreprocessConfig, adjust_contrast, decode_image, preprocess
from .saliency import FusedSaliency, fm_g_cam, grad_cam, overlay
from .train import FreezeSpec, TrainConfig, TrainResult, fit, train_model

__version__ = "1.0.0"

__all__ = [
    "AlignmentError",
    "ArchiveError",
    "ArtClassifier",
    "ArtbrainError",
    "AttentionConvNeXt",
    "ConfigurationError",
    "DataError",
    "FormatError",
    "FreezeSpec",
    "FusedSaliency",
    "MAPPING_VERSION",
    "ModelConfig",
    "NUM_CLASSES",
    "NUM_SOURCES",
    "NUM_STYLES",
    "NumericError",
    "Prediction",
    "Predictor",
    "PreprocessConfig",
    "Source",
    "StateError",
    "Style",
    "TrainConfig",
    "TrainResult",
    "WeightArchive",
    "adjust_contrast",
    "build_network",
    "class_of",
    "decode_image",
    "fit",
    "fm_g_cam",
    "grad_cam",
    "load_archive",
    "overlay",
    "parts_of",
    "preprocess",
    "prediction_from_probs",
    "save_archive",
    "source_marginals",
    "style_marginals",
    "train_model",
]
