"""AttentionConvNeXt: staged backbone, channel attention, classifier head.

Pipeline: backbone taps -> spatial alignment + channel concat -> attention
reweighting -> global average pool -> two linear layers with dropout ->
softmax over the 30 (source, style) classes. ``PlainBackboneNet`` is the
attention-free baseline used in ablation comparisons: final backbone stage ->
global average pool -> the same classifier head.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from . import labels
from .archive import WeightArchive, load_archive, save_archive
from .attention import DEFAULT_REDUCTION, ChannelAttention, concat_taps
from .backbone import BackboneConfig, StagedBackbone, VARIANTS
from .errors import ConfigurationError, NumericError, StateError
from .preprocess import ImageTensor, PreprocessConfig

PROB_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters of the full predictor."""

    backbone: BackboneConfig
    reduction: int = DEFAULT_REDUCTION
    hidden_width: int = 256
    dropout: float = 0.3
    use_attention: bool = True

    def to_metadata(self) -> dict:
        return {
            "backbone": {
                "stage_channel_counts": list(self.backbone.stage_channel_counts),
                "stage_depths": list(self.backbone.stage_depths),
                "input_side": self.backbone.input_side,
                "tap_stages": list(self.backbone.tap_stages),
                "variant_name": self.backbone.variant_name,
            },
            "reduction": self.reduction,
            "hidden_width": self.hidden_width,
            "dropout": self.dropout,
            "use_attention": self.use_attention,
            "mapping_version": labels.MAPPING_VERSION,
        }

    @classmethod
    def from_metadata(cls, metadata: dict) -> "ModelConfig":
        try:
            b = metadata["backbone"]
            backbone = BackboneConfig(
                stage_channel_counts=tuple(b["stage_channel_counts"]),
                stage_depths=tuple(b["stage_depths"]),
                input_side=b["input_side"],
                tap_stages=tuple(b["tap_stages"]),
                variant_name=b.get("variant_name", "custom"),
            )
            return cls(
                backbone=backbone,
                reduction=metadata["reduction"],
                hidden_width=metadata["hidden_width"],
                dropout=metadata["dropout"],
                use_attention=metadata.get("use_attention", True),
            )
        except KeyError as exc:
            raise ConfigurationError(f"archive metadata missing model key: {exc}") from exc

    @classmethod
    def tiny(cls, **overrides) -> "ModelConfig":
        return cls(backbone=VARIANTS["tiny"], **overrides)

    @classmethod
    def full(cls, **overrides) -> "ModelConfig":
        return cls(backbone=VARIANTS["full"], **overrides)


@dataclass
class Prediction:
    """30-way distribution with derived marginals and ranked top entries."""

    probs: np.ndarray
    top_k: list[tuple[int, float]]
    style_marginals: np.ndarray
    source_marginals: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.shape != (labels.NUM_CLASSES,):
            raise ConfigurationError(f"probs must have length {labels.NUM_CLASSES}")
        if self.probs.min() < 0 or abs(self.probs.sum() - 1.0) > PROB_TOLERANCE:
            raise NumericError("probabilities must be non-negative and sum to 1")

    @property
    def top_class(self) -> int:
        return self.top_k[0][0]

    @property
    def predicted_source(self) -> labels.Source:
        return labels.Source(int(np.argmax(self.source_marginals)))

    @property
    def predicted_style(self) -> labels.Style:
        return labels.Style(int(np.argmax(self.style_marginals)))


def top_k_classes(probs: np.ndarray, k: int) -> list[tuple[int, float]]:
    """The k most probable classes, ties broken by ascending class index."""
    probs = np.asarray(probs, dtype=np.float64)
    if not 1 <= k <= probs.shape[0]:
        raise ValueError(f"k must be in [1, {probs.shape[0]}], got {k}")
    order = sorted(range(probs.shape[0]), key=lambda i: (-probs[i], i))
    return [(i, float(probs[i])) for i in order[:k]]


def prediction_from_probs(probs: np.ndarray, k: int = 3) -> Prediction:
    probs = np.asarray(probs, dtype=np.float64)
    return Prediction(
        probs=probs,
        top_k=top_k_classes(probs, k),
        style_marginals=labels.style_marginals(probs),
        source_marginals=labels.source_marginals(probs),
    )


class ClassifierHead(nn.Module):
    """Two linear layers separated by dropout; emits raw class logits."""

    def __init__(self, in_features: int, hidden_width: int, dropout: float):
        super().__init__()
        self.drop1 = nn.Dropout(dropout)
        self.fc1 = nn.Linear(in_features, hidden_width)
        self.act = nn.GELU()
        self.drop2 = nn.Dropout(dropout)
        self.fc2 = nn.Linear(hidden_width, labels.NUM_CLASSES)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.fc2(self.drop2(self.act(self.fc1(self.drop1(x)))))


class AttentionConvNeXt(nn.Module):
    """Full detector: taps, attention reweighting, classifier."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        if not config.use_attention:
            raise ConfigurationError("use PlainBackboneNet for the attention-free baseline")
        self.model_config = config
        self.backbone = StagedBackbone(config.backbone)
        self.feature_channels = sum(config.backbone.tap_channels)
        self.attention = ChannelAttention(self.feature_channels, config.reduction)
        self.classifier = ClassifierHead(
            self.feature_channels, config.hidden_width, config.dropout
        )

    def forward_weighted_block(self, x: torch.Tensor) -> torch.Tensor:
        """Attention-weighted concatenated feature block (B, C, h, h)."""
        taps = self.backbone.forward_taps(x)
        block = concat_taps(taps)
        return self.attention(block.data)

    def head_logits(self, weighted_block: torch.Tensor) -> torch.Tensor:
        """Classifier logits from a weighted block; saliency enters here."""
        return self.classifier(weighted_block.mean(dim=(-2, -1)))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head_logits(self.forward_weighted_block(x))


class PlainBackboneNet(nn.Module):
    """Ablation baseline: backbone final stage, pooled, same classifier head."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.model_config = config
        self.backbone = StagedBackbone(config.backbone)
        self.feature_channels = config.backbone.stage_channel_counts[-1]
        self.classifier = ClassifierHead(
            self.feature_channels, config.hidden_width, config.dropout
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.classifier(self.backbone(x).mean(dim=(-2, -1)))


def build_network(config: ModelConfig) -> nn.Module:
    if config.use_attention:
        return AttentionConvNeXt(config)
    return PlainBackboneNet(config)


def network_to_archive(model: nn.Module, extra_metadata: dict | None = None) -> WeightArchive:
    """Snapshot a network's parameters into an archive with rebuild metadata."""
    tensors = {
        name: value.detach().cpu().numpy().astype(np.float32)
        for name, value in model.state_dict().items()
    }
    metadata = {"model": model.model_config.to_metadata()}
    if extra_metadata:
        metadata.update(extra_metadata)
    return WeightArchive(
        tensors=tensors,
        variant=model.model_config.backbone.variant_name,
        metadata=metadata,
    )


def network_from_archive(archive: WeightArchive) -> nn.Module:
    """Rebuild a network from archive metadata and load its weights."""
    if "model" not in archive.metadata:
        raise ConfigurationError("archive carries no model metadata")
    config = ModelConfig.from_metadata(archive.metadata["model"])
    model = build_network(config)
    state = model.state_dict()
    missing = [name for name in state if name not in archive]
    if missing:
        raise ConfigurationError(f"archive is missing tensors: {missing[:5]}")
    new_state = {}
    for name, tensor in state.items():
        stored = archive[name]
        if tuple(stored.shape) != tuple(tensor.shape):
            raise ConfigurationError(
                f"weight {name!r} has shape {tuple(stored.shape)}, "
                f"module expects {tuple(tensor.shape)}"
            )
        new_state[name] = torch.from_numpy(stored.copy()).to(tensor.dtype)
    model.load_state_dict(new_state)
    model.eval()
    return model


class Predictor:
    """Inference facade: preprocessing, eval-mode forward, typed predictions.

    Immutable after construction; safe to share across request handlers.
    """

    def __init__(
        self,
        model: nn.Module,
        preprocess_config: PreprocessConfig | None = None,
        model_version: str = "unversioned",
    ):
        if model is None:
            raise StateError("no model weights loaded")
        self.model = model.eval()
        side = model.model_config.backbone.input_side
        self.preprocess_config = preprocess_config or PreprocessConfig(target_side=side)
        if self.preprocess_config.target_side != side:
            raise ConfigurationError(
                f"preprocess target {self.preprocess_config.target_side} != "
                f"model input side {side}"
            )
        self.model_version = model_version
        self.mapping_version = labels.MAPPING_VERSION

    @classmethod
    def from_archive(cls, path: str | Path) -> "Predictor":
        path = Path(path)
        archive = load_archive(path)
        model = network_from_archive(archive)
        digest = hashlib.sha256(path.read_bytes()).hexdigest()[:12]
        version = f"{archive.variant}-{digest}"
        return cls(model=model, model_version=version)

    def save(self, path: str | Path) -> Path:
        return save_archive(network_to_archive(self.model), path)

    def predict_tensor(self, image: ImageTensor, k: int = 3, mode: str = "eval") -> Prediction:
        """Run the network on a preprocessed image and package the distribution."""
        if mode not in ("train", "eval"):
            raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
        if not image.normalized:
            raise StateError("image has not been normalized; run preprocess first")
        batch = torch.from_numpy(image.data).unsqueeze(0).float()
        self.model.train(mode == "train")
        try:
            context = torch.no_grad() if mode == "eval" else torch.enable_grad()
            with context:
                logits = self.model(batch)[0]
        finally:
            self.model.eval()
        if not torch.isfinite(logits).all():
            raise NumericError("non-finite classifier logits")
        probs = torch.softmax(logits.detach().double(), dim=-1).numpy()
        return prediction_from_probs(probs, k=k)

    def predict(
        self,
        raster: np.ndarray,
        k: int = 3,
        contrast_percent: float = 0.0,
    ) -> Prediction:
        """Preprocess an (H, W, 3) uint8 raster and predict."""
        from .preprocess import preprocess

        image = preprocess(raster, self.preprocess_config, contrast_percent=contrast_percent)
        return self.predict_tensor(image, k=k)
