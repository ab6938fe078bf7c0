"""Channel attention over multi-depth feature blocks.

The three backbone taps are spatially aligned by adaptive average pooling
(never upsampled), concatenated along channels, squeezed to one value per
channel by global average pooling, and passed through a bias-free two-layer
bottleneck ``sigmoid(W2 @ relu(W1 @ y))`` whose output reweights the
concatenated channels. The bottleneck hidden width is ``C / reduction``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from .backbone import FeatureTaps
from .errors import AlignmentError, ConfigurationError

DEFAULT_REDUCTION = 4

TAP_NAMES = ("low", "mid", "high")


@dataclass
class ConcatBlock:
    """Channel-concatenated feature block with per-channel origin tags."""

    data: torch.Tensor  # (B, C, H, W)
    channel_origins: tuple[str, ...]

    def __post_init__(self):
        if self.data.ndim != 4:
            raise ConfigurationError(
                f"concat block must be (B, C, H, W), got shape {tuple(self.data.shape)}"
            )
        if len(self.channel_origins) != self.data.shape[1]:
            raise ConfigurationError(
                f"{len(self.channel_origins)} origin tags for {self.data.shape[1]} channels"
            )

    @property
    def channels(self) -> int:
        return self.data.shape[1]


@dataclass
class ChannelImportance:
    """Per-channel multipliers in the open interval (0, 1)."""

    omega: np.ndarray
    reduction_factor: int

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=np.float64).reshape(-1)
        if self.reduction_factor <= 0:
            raise ConfigurationError("reduction factor must be positive")
        if not np.all((self.omega > 0.0) & (self.omega < 1.0)):
            raise ConfigurationError("channel importances must lie strictly in (0, 1)")


def concat_taps(taps: FeatureTaps, align_side: int | None = None) -> ConcatBlock:
    """Pool each tap to ``align_side`` and stack channels in (low, mid, high) order.

    ``align_side`` defaults to the high tap's spatial side. Upsampling is
    refused: the target side may not exceed any tap's side.
    """
    blocks = (taps.low, taps.mid, taps.high)
    if align_side is None:
        align_side = taps.high.shape[-1]
    for name, block in zip(TAP_NAMES, blocks):
        if align_side > block.shape[-2] or align_side > block.shape[-1]:
            raise AlignmentError(
                f"align side {align_side} exceeds {name} tap side "
                f"{tuple(block.shape[-2:])}; upsampling is refused"
            )
    pooled = [F.adaptive_avg_pool2d(b, align_side) for b in blocks]
    origins = []
    for name, block in zip(TAP_NAMES, blocks):
        origins.extend([name] * block.shape[1])
    return ConcatBlock(data=torch.cat(pooled, dim=1), channel_origins=tuple(origins))


def global_average_pool(block: ConcatBlock | torch.Tensor) -> torch.Tensor:
    """Mean over the spatial axes: one value per channel, shape (B, C)."""
    data = block.data if isinstance(block, ConcatBlock) else block
    if data.numel() == 0:
        raise ConfigurationError("cannot pool an empty block")
    return data.mean(dim=(-2, -1))


class ChannelAttention(nn.Module):
    """Bias-free squeeze-and-excitation bottleneck over ``channels`` inputs.

    ``w1`` maps C -> C/reduction, ``w2`` maps back; neither layer has a bias
    term. Weights are initialized uniformly in +/- sqrt(1 / fan_in).
    """

    def __init__(self, channels: int, reduction: int = DEFAULT_REDUCTION):
        super().__init__()
        if reduction <= 0 or channels % reduction != 0:
            raise ConfigurationError(
                f"reduction {reduction} must be a positive divisor of {channels} channels"
            )
        self.channels = channels
        self.reduction = reduction
        hidden = channels // reduction
        self.w1 = nn.Parameter(torch.empty(hidden, channels))
        self.w2 = nn.Parameter(torch.empty(channels, hidden))
        bound1 = math.sqrt(1.0 / channels)
        bound2 = math.sqrt(1.0 / hidden)
        with torch.no_grad():
            self.w1.uniform_(-bound1, bound1)
            self.w2.uniform_(-bound2, bound2)

    def importance(self, pooled: torch.Tensor) -> torch.Tensor:
        """Importance vector for per-channel means ``pooled`` of shape (B, C)."""
        if pooled.shape[-1] != self.channels:
            raise ConfigurationError(
                f"pooled vector has {pooled.shape[-1]} channels, expected {self.channels}"
            )
        return torch.sigmoid(F.relu(pooled @ self.w1.T) @ self.w2.T)

    def forward(self, block: torch.Tensor) -> torch.Tensor:
        """Reweight each channel of (B, C, H, W) by its importance."""
        omega = self.importance(block.mean(dim=(-2, -1)))
        return block * omega[:, :, None, None]


def channel_importance(
    pooled: torch.Tensor | np.ndarray,
    w1: torch.Tensor | np.ndarray,
    w2: torch.Tensor | np.ndarray,
) -> torch.Tensor:
    """Functional form: ``sigmoid(w2 @ relu(w1 @ pooled))`` without biases."""
    pooled = torch.as_tensor(pooled)
    w1 = torch.as_tensor(w1)
    w2 = torch.as_tensor(w2)
    if w1.shape[1] != pooled.shape[-1] or w2.shape[1] != w1.shape[0]:
        raise ConfigurationError(
            f"inconsistent shapes: pooled {tuple(pooled.shape)}, "
            f"w1 {tuple(w1.shape)}, w2 {tuple(w2.shape)}"
        )
    if w2.shape[0] != w1.shape[1]:
        raise ConfigurationError("w2 must map the bottleneck back to the channel count")
    return torch.sigmoid(F.relu(pooled @ w1.T) @ w2.T)


def weight_channels(
    block: ConcatBlock | torch.Tensor,
    omega: torch.Tensor | np.ndarray,
) -> torch.Tensor:
    """Multiply channel ``c`` of the block by ``omega[c]``; shape is preserved."""
    data = block.data if isinstance(block, ConcatBlock) else block
    omega = torch.as_tensor(omega, dtype=data.dtype)
    if omega.ndim == 1:
        omega = omega.unsqueeze(0)
    if omega.shape[-1] != data.shape[1]:
        raise ConfigurationError(
            f"omega length {omega.shape[-1]} != block channels {data.shape[1]}"
        )
    return data * omega[:, :, None, None]
