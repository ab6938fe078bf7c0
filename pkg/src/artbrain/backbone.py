"""Staged convolutional feature extractor with low/mid/high taps.

ConvNeXt-style design: a 4x4 stride-4 patchify stem, then stages of blocks
(depthwise 7x7 convolution, channel layer norm, pointwise 4x expansion with
GELU, residual). Stages after the first start with a norm + 2x2 stride-2
downsampling convolution. Three configurable stage outputs are exposed as the
low, mid, and high feature taps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .archive import WeightArchive
from .errors import ConfigurationError, NumericError

LAYERNORM_EPS = 1e-6


@dataclass(frozen=True)
class BackboneConfig:
    """Stage widths/depths and tap placement for a staged backbone."""

    stage_channel_counts: tuple[int, ...]
    stage_depths: tuple[int, ...]
    input_side: int = 224
    tap_stages: tuple[int, int, int] = (1, 2, 3)
    variant_name: str = "custom"

    def __post_init__(self):
        channels = tuple(self.stage_channel_counts)
        depths = tuple(self.stage_depths)
        object.__setattr__(self, "stage_channel_counts", channels)
        object.__setattr__(self, "stage_depths", depths)
        object.__setattr__(self, "tap_stages", tuple(self.tap_stages))
        if len(channels) != len(depths):
            raise ConfigurationError(
                f"stage_channel_counts ({len(channels)}) and stage_depths "
                f"({len(depths)}) must have equal length"
            )
        if len(channels) < 3:
            raise ConfigurationError("a backbone needs at least 3 stages for taps")
        if any(c <= 0 for c in channels) or any(d <= 0 for d in depths):
            raise ConfigurationError("stage channel counts and depths must be positive")
        if (
            len(self.tap_stages) != 3
            or list(self.tap_stages) != sorted(set(self.tap_stages))
            or self.tap_stages[0] < 0
        ):
            raise ConfigurationError(
                f"tap_stages must be three strictly increasing non-negative indices, "
                f"got {self.tap_stages}"
            )
        if self.tap_stages[-1] >= len(channels):
            raise ConfigurationError(
                f"tap stage {self.tap_stages[-1]} out of range for {len(channels)} stages"
            )
        if self.input_side < 4:
            raise ConfigurationError("input_side must be at least the stem stride (4)")

    @property
    def num_stages(self) -> int:
        return len(self.stage_channel_counts)

    @property
    def tap_channels(self) -> tuple[int, int, int]:
        """Channel counts of the (low, mid, high) taps."""
        return tuple(self.stage_channel_counts[i] for i in self.tap_stages)


VARIANTS: dict[str, BackboneConfig] = {
    # Desk-scale variant: every acceptance test trains this on CPU in minutes.
    "tiny": BackboneConfig(
        stage_channel_counts=(8, 16, 32, 64),
        stage_depths=(1, 1, 1, 1),
        input_side=64,
        tap_stages=(1, 2, 3),
        variant_name="tiny",
    ),
    "full": BackboneConfig(
        stage_channel_counts=(96, 192, 384, 768),
        stage_depths=(3, 3, 9, 3),
        input_side=224,
        tap_stages=(1, 2, 3),
        variant_name="full",
    ),
}


@dataclass
class FeatureTaps:
    """Activation blocks tapped from three backbone depths, batched (B, C, H, W)."""

    low: torch.Tensor
    mid: torch.Tensor
    high: torch.Tensor

    def __post_init__(self):
        sides = [t.shape[-1] for t in (self.low, self.mid, self.high)]
        if not (sides[0] >= sides[1] >= sides[2]):
            raise ConfigurationError(
                f"tap spatial sides must be non-increasing low->high, got {sides}"
            )

    @property
    def channel_counts(self) -> tuple[int, int, int]:
        return (self.low.shape[1], self.mid.shape[1], self.high.shape[1])


class ChannelLayerNorm(nn.Module):
    """LayerNorm over the channel axis of an NCHW tensor."""

    def __init__(self, channels: int):
        super().__init__()
        self.weight = nn.Parameter(torch.ones(channels))
        self.bias = nn.Parameter(torch.zeros(channels))
        self.eps = LAYERNORM_EPS

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        mean = x.mean(dim=1, keepdim=True)
        var = x.var(dim=1, keepdim=True, unbiased=False)
        x = (x - mean) / torch.sqrt(var + self.eps)
        return x * self.weight[:, None, None] + self.bias[:, None, None]


class ConvBlock(nn.Module):
    """Depthwise 7x7 conv, channel norm, pointwise 4x MLP with GELU, residual."""

    def __init__(self, channels: int):
        super().__init__()
        self.dwconv = nn.Conv2d(channels, channels, kernel_size=7, padding=3, groups=channels)
        self.norm = nn.LayerNorm(channels, eps=LAYERNORM_EPS)
        self.pwexpand = nn.Linear(channels, 4 * channels)
        self.act = nn.GELU()
        self.pwproject = nn.Linear(4 * channels, channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        shortcut = x
        x = self.dwconv(x)
        x = x.permute(0, 2, 3, 1)
        x = self.norm(x)
        x = self.pwproject(self.act(self.pwexpand(x)))
        x = x.permute(0, 3, 1, 2)
        return shortcut + x


class StagedBackbone(nn.Module):
    """Backbone producing low/mid/high feature taps from configured stages."""

    def __init__(self, config: BackboneConfig):
        super().__init__()
        self.config = config
        channels = config.stage_channel_counts
        self.stem = nn.Sequential(
            nn.Conv2d(3, channels[0], kernel_size=4, stride=4),
            ChannelLayerNorm(channels[0]),
        )
        stages = []
        for i, (width, depth) in enumerate(zip(channels, config.stage_depths)):
            layers: list[nn.Module] = []
            if i > 0:
                layers.append(ChannelLayerNorm(channels[i - 1]))
                layers.append(nn.Conv2d(channels[i - 1], width, kernel_size=2, stride=2))
            layers.extend(ConvBlock(width) for _ in range(depth))
            stages.append(nn.Sequential(*layers))
        self.stages = nn.ModuleList(stages)

    def forward_taps(self, x: torch.Tensor) -> FeatureTaps:
        """Run the backbone and collect the three configured stage outputs."""
        if x.ndim == 3:
            x = x.unsqueeze(0)
        taps: dict[int, torch.Tensor] = {}
        x = self.stem(x)
        for i, stage in enumerate(self.stages):
            x = stage(x)
            if i in self.config.tap_stages:
                if not torch.isfinite(x).all():
                    raise NumericError(f"non-finite activations at stage {i}")
                taps[i] = x
        low, mid, high = (taps[i] for i in self.config.tap_stages)
        return FeatureTaps(low=low, mid=mid, high=high)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """Final stage output, for attention-free baselines."""
        if x.ndim == 3:
            x = x.unsqueeze(0)
        x = self.stem(x)
        for stage in self.stages:
            x = stage(x)
        return x

    def stage_parameters(self, stage_index: int):
        """Named parameters of one stage (the stem is charged to stage 0).

        Names match this module's ``named_parameters`` so callers can map
        entries back to state-dict keys.
        """
        pairs = [
            (f"stages.{stage_index}.{name}", param)
            for name, param in self.stages[stage_index].named_parameters()
        ]
        if stage_index == 0:
            pairs = [
                (f"stem.{name}", param) for name, param in self.stem.named_parameters()
            ] + pairs
        return pairs


def state_dict_to_tensors(module: nn.Module, prefix: str) -> dict[str, np.ndarray]:
    """Flatten a module's parameters/buffers into archive tensors."""
    out = {}
    for name, tensor in module.state_dict().items():
        out[prefix + name] = tensor.detach().cpu().numpy().astype(np.float32)
    return out


def load_state_from_archive(module: nn.Module, archive: WeightArchive, prefix: str) -> None:
    """Load archive tensors named ``prefix*`` into the module, checking shapes."""
    state = module.state_dict()
    missing = []
    new_state = {}
    for name, tensor in state.items():
        key = prefix + name
        if key not in archive:
            missing.append(key)
            continue
        stored = archive[key]
        if tuple(stored.shape) != tuple(tensor.shape):
            raise ConfigurationError(
                f"weight {key!r} has shape {tuple(stored.shape)}, "
                f"module expects {tuple(tensor.shape)}"
            )
        new_state[name] = torch.from_numpy(stored.copy()).to(tensor.dtype)
    if missing:
        raise ConfigurationError(f"archive is missing tensors: {missing[:5]}")
    module.load_state_dict(new_state)


def forward_taps(
    image: torch.Tensor | np.ndarray,
    config: BackboneConfig,
    weights: WeightArchive,
) -> FeatureTaps:
    """One-shot tap extraction: build the backbone, load weights, run eval."""
    backbone = StagedBackbone(config)
    load_state_from_archive(backbone, weights, prefix="backbone.")
    backbone.eval()
    if isinstance(image, np.ndarray):
        image = torch.from_numpy(image)
    with torch.no_grad():
        return backbone.forward_taps(image.float())
