"""Class activation maps over the attention-weighted feature block.

Both methods hook the deepest block that still carries multi-depth structure:
the attention module's output. Channel weights are spatial means of the
gradient of the pre-softmax class score with respect to that block (scores,
not probabilities, so maps are invariant to logit shifts and gradients do not
saturate).

Grad-CAM: ``relu(sum_c w_c A_c)`` min-max normalized per class. The fused
multi-class map computes the weighted sum for each of the top-k classes,
min-max normalizes jointly across the k-map stack (preserving inter-class
comparability), applies ReLU, then assigns every pixel exclusively to the
class with the maximal value there, ties going to the higher-ranked class.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch.nn import functional as F

from . import labels
from .errors import NumericError
from .model import AttentionConvNeXt, Prediction, prediction_from_probs
from .preprocess import ImageTensor

# Rank -> overlay color (RGB). Three documented colors for the default k=3;
# longer rankings cycle through the extended palette deterministically.
LEGEND_PALETTE: tuple[tuple[int, int, int], ...] = (
    (220, 38, 38),    # rank 0: red
    (22, 163, 74),    # rank 1: green
    (37, 99, 235),    # rank 2: blue
    (217, 119, 6),    # amber
    (124, 58, 237),   # violet
    (13, 148, 136),   # teal
    (219, 39, 119),   # pink
    (101, 163, 13),   # lime
    (8, 145, 178),    # cyan
    (146, 64, 14),    # brown
)


def legend_color(rank: int) -> tuple[int, int, int]:
    return LEGEND_PALETTE[rank % len(LEGEND_PALETTE)]


@dataclass
class ClassHeatLayer:
    """Non-negative heat map in [0, 1] for one class, at block resolution."""

    class_index: int
    map: np.ndarray

    def __post_init__(self):
        self.map = np.asarray(self.map, dtype=np.float32)
        if self.map.min() < 0.0 or self.map.max() > 1.0:
            raise NumericError("heat layer values must lie in [0, 1]")


@dataclass
class FusedSaliency:
    """Ranked per-class heat layers with exclusive pixel assignment."""

    layers: list[ClassHeatLayer]
    assignment: np.ndarray  # (h, w) int; layer rank of the winner, -1 for none
    legend: list[dict]
    prediction: Prediction


def _weighted_block_and_scores(model: AttentionConvNeXt, image: ImageTensor):
    """Forward pass split at the hooked block so gradients stop there."""
    model.eval()
    batch = torch.from_numpy(image.data).unsqueeze(0).float()
    with torch.no_grad():
        block = model.forward_weighted_block(batch)
    hooked = block.detach().requires_grad_(True)
    logits = model.head_logits(hooked)
    return hooked, logits


def _channel_weights(logits: torch.Tensor, hooked: torch.Tensor, class_index: int) -> torch.Tensor:
    """Spatial mean of d(score)/d(block) per channel, shape (C,)."""
    (grad,) = torch.autograd.grad(logits[0, class_index], hooked, retain_graph=True)
    return grad[0].mean(dim=(-2, -1))


def _weighted_map(hooked: torch.Tensor, weights: torch.Tensor) -> np.ndarray:
    cam = (weights[:, None, None] * hooked[0].detach()).sum(dim=0)
    return cam.numpy().astype(np.float32)


def grad_cam(model: AttentionConvNeXt, image: ImageTensor, class_index: int) -> ClassHeatLayer:
    """Single-class heat map: relu of the weighted block, min-max normalized."""
    if not 0 <= class_index < labels.NUM_CLASSES:
        raise ValueError(f"class index {class_index} outside [0, {labels.NUM_CLASSES - 1}]")
    hooked, logits = _weighted_block_and_scores(model, image)
    weights = _channel_weights(logits, hooked, class_index)
    cam = np.maximum(_weighted_map(hooked, weights), 0.0)
    lo, hi = float(cam.min()), float(cam.max())
    if hi > lo:
        cam = (cam - lo) / (hi - lo)
    else:
        cam = np.zeros_like(cam)
    return ClassHeatLayer(class_index=class_index, map=cam)


def fm_g_cam(model: AttentionConvNeXt, image: ImageTensor, k: int = 3) -> FusedSaliency:
    """Fused multi-class map over the top-k predicted classes."""
    if not 1 <= k <= labels.NUM_CLASSES:
        raise ValueError(f"k must be in [1, {labels.NUM_CLASSES}], got {k}")
    hooked, logits = _weighted_block_and_scores(model, image)
    if not torch.isfinite(logits).all():
        raise NumericError("non-finite classifier logits")
    probs = torch.softmax(logits[0].detach().double(), dim=-1).numpy()
    prediction = prediction_from_probs(probs, k=k)

    maps = []
    for class_index, _ in prediction.top_k:
        weights = _channel_weights(logits, hooked, class_index)
        maps.append(_weighted_map(hooked, weights))
    stack = np.stack(maps)

    # Joint min-max across the k-map stack, then the final ReLU.
    lo, hi = float(stack.min()), float(stack.max())
    if hi > lo:
        stack = (stack - lo) / (hi - lo)
    else:
        stack = np.zeros_like(stack)
    stack = np.maximum(stack, 0.0)

    # Exclusive assignment: argmax over ranked layers takes the first (highest
    # probability) class on ties; pixels with no positive activation stay -1.
    assignment = np.argmax(stack, axis=0).astype(np.int64)
    assignment[stack.max(axis=0) <= 0.0] = -1

    layers = [
        ClassHeatLayer(class_index=class_index, map=stack[rank])
        for rank, (class_index, _) in enumerate(prediction.top_k)
    ]
    legend = []
    for rank, (class_index, prob) in enumerate(prediction.top_k):
        source, style = labels.parts_of(class_index)
        legend.append(
            {
                "class_index": class_index,
                "style": style.display_name,
                "source": source.display_name,
                "color": list(legend_color(rank)),
                "rank": rank,
                "probability": prob,
            }
        )
    return FusedSaliency(
        layers=layers, assignment=assignment, legend=legend, prediction=prediction
    )


def _upsample(map_: np.ndarray, side: int) -> np.ndarray:
    tensor = torch.from_numpy(map_)[None, None].float()
    out = F.interpolate(tensor, size=(side, side), mode="bilinear", align_corners=False)
    return out[0, 0].numpy()


def overlay(raster: np.ndarray, saliency: FusedSaliency, alpha: float) -> np.ndarray:
    """Blend legend colors onto the raster, scaled by per-pixel heat.

    The winning class is recomputed per output pixel from the upsampled
    layers, so assignment stays exclusive at raster resolution.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha {alpha} outside [0, 1]")
    raster = np.asarray(raster)
    if raster.ndim != 3 or raster.shape[2] != 3 or raster.shape[0] != raster.shape[1]:
        raise ValueError(f"expected a square (S, S, 3) raster, got {raster.shape}")
    side = raster.shape[0]
    stack = np.stack([_upsample(layer.map, side) for layer in saliency.layers])
    stack = np.clip(stack, 0.0, 1.0)
    winners = np.argmax(stack, axis=0)
    heat = stack.max(axis=0)
    heat[heat <= 0.0] = 0.0

    colors = np.array(
        [legend_color(rank) for rank in range(len(saliency.layers))], dtype=np.float32
    )
    color_image = colors[winners]
    blend = alpha * heat[..., None]
    out = (1.0 - blend) * raster.astype(np.float32) + blend * color_image
    return np.clip(np.round(out), 0, 255).astype(np.uint8)
