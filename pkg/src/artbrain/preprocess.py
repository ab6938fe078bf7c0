"""Image decoding, resizing, normalization, and the contrast knob.

The model consumes square float tensors normalized with ImageNet channel
statistics: shorter side resized to the target (bilinear), center crop to a
square, scale to [0, 1], then per-channel ``(x - mean) / std``. Contrast
perturbation is a linear pivot around mid-gray applied before normalization.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import FormatError

IMAGENET_MEANS = (0.485, 0.456, 0.406)
IMAGENET_STDS = (0.229, 0.224, 0.225)


@dataclass(frozen=True)
class PreprocessConfig:
    """Geometry and normalization constants for model input."""

    target_side: int = 224
    channel_means: tuple[float, float, float] = IMAGENET_MEANS
    channel_stds: tuple[float, float, float] = IMAGENET_STDS
    resize_filter: str = "bilinear"

    def __post_init__(self):
        if self.target_side < 16:
            raise ValueError(f"target_side must be >= 16, got {self.target_side}")
        if any(s <= 0 for s in self.channel_stds):
            raise ValueError("channel_stds must be strictly positive")
        if self.resize_filter != "bilinear":
            raise ValueError(f"unsupported resize filter {self.resize_filter!r}")


@dataclass
class ImageTensor:
    """Channels-first float image with preprocessing provenance flags."""

    data: np.ndarray  # (3, S, S) float32
    normalized: bool = True
    contrast_factor_applied: float = 1.0

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[0] != 3:
            raise ValueError(f"expected (3, S, S) data, got shape {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("image tensor contains non-finite values")


def decode_image(payload: bytes) -> np.ndarray:
    """Decode JPEG/PNG bytes into an (H, W, 3) uint8 raster."""
    try:
        with Image.open(io.BytesIO(payload)) as img:
            img.load()
            rgb = img.convert("RGB")
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise FormatError(f"payload is not a decodable image: {exc}") from exc
    return np.asarray(rgb, dtype=np.uint8)


def _check_raster(raster: np.ndarray) -> np.ndarray:
    raster = np.asarray(raster)
    if raster.ndim != 3 or raster.shape[2] != 3:
        raise FormatError(f"expected an (H, W, 3) RGB raster, got shape {raster.shape}")
    if raster.shape[0] < 1 or raster.shape[1] < 1:
        raise FormatError("raster has zero pixels")
    return raster


def resize_and_crop(raster: np.ndarray, target_side: int) -> np.ndarray:
    """Resize the shorter side to ``target_side`` (bilinear), center-crop square.

    Inputs already at the target square geometry pass through untouched, which
    makes the geometry step exactly idempotent.
    """
    h, w = raster.shape[:2]
    if h == target_side and w == target_side:
        return raster
    scale = target_side / min(h, w)
    new_w = max(target_side, int(round(w * scale)))
    new_h = max(target_side, int(round(h * scale)))
    img = Image.fromarray(raster.astype(np.uint8), mode="RGB")
    img = img.resize((new_w, new_h), Image.BILINEAR)
    left = (new_w - target_side) // 2
    top = (new_h - target_side) // 2
    img = img.crop((left, top, left + target_side, top + target_side))
    return np.asarray(img, dtype=np.uint8)


def preprocess(
    raster: np.ndarray,
    config: PreprocessConfig | None = None,
    contrast_percent: float = 0.0,
) -> ImageTensor:
    """Turn an (H, W, 3) uint8 raster into a normalized model input.

    ``contrast_percent`` is applied in the [0, 1] domain before normalization.
    """
    config = config or PreprocessConfig()
    raster = _check_raster(raster)
    if raster.dtype != np.uint8:
        raise FormatError(f"expected 8-bit raster, got dtype {raster.dtype}")
    raster = resize_and_crop(raster, config.target_side)
    scaled = raster.astype(np.float32) / 255.0
    factor = 1.0
    if contrast_percent != 0.0:
        scaled = adjust_contrast(scaled, contrast_percent)
        factor = 1.0 + contrast_percent / 100.0
    means = np.asarray(config.channel_means, dtype=np.float32)
    stds = np.asarray(config.channel_stds, dtype=np.float32)
    normalized = (scaled - means) / stds
    data = np.ascontiguousarray(normalized.transpose(2, 0, 1))
    return ImageTensor(data=data, normalized=True, contrast_factor_applied=factor)


def adjust_contrast(raster: np.ndarray, percent: float) -> np.ndarray:
    """Scale contrast linearly around mid-gray 0.5 and clamp to [0, 1].

    ``out = clamp(0.5 + f * (in - 0.5))`` with ``f = 1 + percent / 100``;
    percent ranges over [-100, +100], so f over [0, 2].
    """
    if not -100.0 <= percent <= 100.0:
        raise ValueError(f"contrast percent {percent} outside [-100, 100]")
    raster = np.asarray(raster, dtype=np.float32)
    if raster.min() < 0.0 or raster.max() > 1.0:
        raise ValueError("contrast input must lie in [0, 1]")
    factor = 1.0 + percent / 100.0
    return np.clip(0.5 + factor * (raster - 0.5), 0.0, 1.0)
