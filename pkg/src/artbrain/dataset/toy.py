"""Deterministic synthetic toy dataset for desk-scale runs.

Every image is procedurally generated at 64x64 from a seeded RNG: the style
picks one of ten macro texture families, the source stamps a post-process
fingerprint chosen to be separable in the frequency domain:

- human: box blur plus film grain (no structured residual),
- latent diffusion: pixels replaced by their 8x8 block's quantized mean,
  leaving energy at multiples of side/8 in the spectrum,
- stable diffusion: pixel-parity checker residual (energy concentrated at
  the Nyquist bin).

Files are JPEG quality 97 with chroma subsampling off so the fingerprints
survive encoding. The tree follows the dataset layout and filename
convention, and carries ``mapping.json`` / ``counts.json`` sidecars so the
validator can check it without extra configuration.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import ConfigurationError
from ..labels import NUM_SOURCES, NUM_STYLES, Source, Style, class_of
from .filenames import SEED_MAX, format_filename
from .manifest import (
    COUNTS_FILENAME,
    MAPPING_FILENAME,
    DatasetManifest,
    SampleRecord,
    counts_to_nested,
)

JPEG_QUALITY = 97
BLOCK = 8            # latent fingerprint block size
BLOCK_LEVELS = 6     # block means quantize to this many levels per channel
CHECKER_AMPLITUDE = 0.09
BLOCK_MIX = 1.0
GRAIN_SIGMA = 0.10


@dataclass(frozen=True)
class ToySpec:
    num_sources: int = 3
    num_styles: int = 2
    train_per_subclass: int = 100
    test_per_subclass: int = 25
    image_side: int = 64

    def __post_init__(self):
        if not 1 <= self.num_sources <= NUM_SOURCES:
            raise ConfigurationError(f"num_sources must lie in [1, {NUM_SOURCES}]")
        if not 1 <= self.num_styles <= NUM_STYLES:
            raise ConfigurationError(f"num_styles must lie in [1, {NUM_STYLES}]")
        if self.train_per_subclass < 1 or self.test_per_subclass < 1:
            raise ConfigurationError("per-subclass counts must be at least 1")
        if self.image_side < 16 or self.image_side % (2 * BLOCK):
            raise ConfigurationError(
                f"image side must be at least 16 and a multiple of {2 * BLOCK}"
            )

    @property
    def sources(self) -> tuple[Source, ...]:
        return tuple(Source(i) for i in range(self.num_sources))

    @property
    def styles(self) -> tuple[Style, ...]:
        return tuple(Style(i) for i in range(self.num_styles))


def folder_name(source: Source, style: Style) -> str:
    return f"{source.name.lower()}__{style.name.lower()}"


def _upsample(field: np.ndarray, side: int) -> np.ndarray:
    """Separable bilinear resize of a small square field."""
    def along_rows(a: np.ndarray) -> np.ndarray:
        pos = np.linspace(0, a.shape[0] - 1, side)
        lo = np.floor(pos).astype(int)
        hi = np.minimum(lo + 1, a.shape[0] - 1)
        frac = (pos - lo)[:, None]
        return (1 - frac) * a[lo] + frac * a[hi]

    return along_rows(along_rows(field).T).T


def _smooth_noise(rng: np.random.Generator, side: int, cells: int) -> np.ndarray:
    return _upsample(rng.standard_normal((cells, cells)), side)


def _coords(side: int) -> tuple[np.ndarray, np.ndarray]:
    axis = np.arange(side, dtype=np.float64) / side
    return np.meshgrid(axis, axis, indexing="ij")


# Per-style RGB tints; hue is an extra style cue on top of the texture family.
_TINTS = {
    Style.ART_NOUVEAU: (0.92, 0.82, 0.58),
    Style.BAROQUE: (0.80, 0.62, 0.42),
    Style.EXPRESSIONISM: (0.92, 0.42, 0.36),
    Style.IMPRESSIONISM: (0.68, 0.86, 0.72),
    Style.POST_IMPRESSIONISM: (0.95, 0.78, 0.46),
    Style.REALISM: (0.84, 0.84, 0.80),
    Style.RENAISSANCE: (0.76, 0.70, 0.54),
    Style.ROMANTICISM: (0.58, 0.70, 0.92),
    Style.SURREALISM: (0.80, 0.58, 0.90),
    Style.UKIYO_E: (0.88, 0.90, 0.96),
}


def _style_luma(style: Style, rng: np.random.Generator, side: int) -> np.ndarray:
    """Macro texture field in [0, 1]; one documented family per style."""
    yy, xx = _coords(side)
    if style is Style.ART_NOUVEAU:
        # Oriented sinusoidal stripes.
        theta = rng.uniform(0, np.pi)
        freq = rng.uniform(3.0, 5.0)
        phase = rng.uniform(0, 2 * np.pi)
        wave = np.sin(2 * np.pi * freq * (xx * np.cos(theta) + yy * np.sin(theta)) + phase)
        return 0.5 + 0.4 * wave
    if style is Style.BAROQUE:
        # Dark ground with a few bright radial blobs.
        luma = np.full((side, side), 0.15)
        for _ in range(rng.integers(3, 6)):
            cy, cx = rng.uniform(0.1, 0.9, size=2)
            sigma = rng.uniform(0.08, 0.18)
            luma += 0.7 * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sigma**2))
        return np.clip(luma, 0, 1)
    if style is Style.EXPRESSIONISM:
        # Coarse high-contrast blotches.
        return 1 / (1 + np.exp(-2.5 * _smooth_noise(rng, side, 4)))
    if style is Style.IMPRESSIONISM:
        # Dappled patches over a medium-scale field.
        base = 0.5 + 0.22 * _smooth_noise(rng, side, 16)
        return np.clip(base + 0.12 * _smooth_noise(rng, side, 32), 0, 1)
    if style is Style.POST_IMPRESSIONISM:
        # Short wavy strokes: a grating with a cell-randomized phase field.
        phase = 2.5 * _smooth_noise(rng, side, 8)
        freq = rng.uniform(5.0, 7.0)
        return 0.5 + 0.4 * np.sin(2 * np.pi * freq * xx + phase)
    if style is Style.REALISM:
        # Smooth vertical gradient with one soft shadow.
        cy, cx = rng.uniform(0.3, 0.7, size=2)
        shadow = 0.25 * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * 0.2**2))
        return np.clip(0.25 + 0.55 * yy - shadow + 0.05, 0, 1)
    if style is Style.RENAISSANCE:
        # Vignette with concentric rings.
        r = np.sqrt((yy - 0.5) ** 2 + (xx - 0.5) ** 2)
        rings = rng.uniform(4.0, 6.0)
        return np.clip(0.65 - 0.35 * r + 0.15 * np.sin(2 * np.pi * rings * r), 0, 1)
    if style is Style.ROMANTICISM:
        # Cloudy two-octave field.
        field = _smooth_noise(rng, side, 8) + 0.5 * _smooth_noise(rng, side, 16)
        return 1 / (1 + np.exp(-1.5 * field))
    if style is Style.SURREALISM:
        # Noise-warped grid motif.
        grid = rng.uniform(3.0, 4.5)
        warp_y = 2.0 * _smooth_noise(rng, side, 6)
        warp_x = 2.0 * _smooth_noise(rng, side, 6)
        cells = np.sin(2 * np.pi * grid * yy + warp_y) * np.sin(2 * np.pi * grid * xx + warp_x)
        return 0.5 + 0.4 * cells
    if style is Style.UKIYO_E:
        # Flat horizontal bands with a wave overlay.
        bands = np.floor(yy * 4) / 4 * 0.5 + 0.3
        wave = 0.18 * np.sin(2 * np.pi * (3 * xx + 1.5 * np.sin(2 * np.pi * yy)))
        return np.clip(bands + wave, 0, 1)
    raise ConfigurationError(f"no texture family for style {style}")


def _box_blur3(image: np.ndarray) -> np.ndarray:
    """3x3 wrap-around box blur (edges carry no semantics in these textures)."""
    out = np.zeros_like(image)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            out += np.roll(np.roll(image, dy, axis=0), dx, axis=1)
    return out / 9.0


def _apply_fingerprint(source: Source, rgb: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    side = rgb.shape[0]
    if source is Source.HUMAN:
        # two passes widen the smoothing so it survives the 4x4 stem pooling
        blurred = _box_blur3(_box_blur3(rgb))
        return blurred + rng.normal(0.0, GRAIN_SIGMA, size=rgb.shape)
    if source is Source.LATENT_DIFFUSION:
        blocks = rgb.reshape(side // BLOCK, BLOCK, side // BLOCK, BLOCK, 3)
        means = blocks.mean(axis=(1, 3), keepdims=True)
        quantized = np.round(means * BLOCK_LEVELS) / BLOCK_LEVELS
        return (blocks + BLOCK_MIX * (quantized - blocks)).reshape(side, side, 3)
    if source is Source.STABLE_DIFFUSION:
        yy, xx = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
        checker = ((yy + xx) % 2 * 2 - 1).astype(np.float64)
        return rgb + CHECKER_AMPLITUDE * checker[..., None]
    raise ConfigurationError(f"no fingerprint for source {source}")


def render_toy_image(source: Source, style: Style, rng: np.random.Generator, side: int) -> np.ndarray:
    """One (side, side, 3) uint8 toy sample."""
    luma = _style_luma(style, rng, side)
    tint = np.asarray(_TINTS[style])
    rgb = luma[..., None] * tint
    rgb = _apply_fingerprint(source, rgb, rng)
    return np.clip(np.round(rgb * 255.0), 0, 255).astype(np.uint8)


def _save_jpeg(pixels: np.ndarray, path: Path):
    Image.fromarray(pixels, mode="RGB").save(
        path, format="JPEG", quality=JPEG_QUALITY, subsampling=0
    )


def generate_toy(spec: ToySpec, seed: int, out: str | Path) -> DatasetManifest:
    """Write the toy tree under ``out``; same spec + seed gives identical bytes."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    records: list[SampleRecord] = []
    mapping_payload: dict[str, dict[str, str]] = {}
    split_sizes = {"train": spec.train_per_subclass, "test": spec.test_per_subclass}

    for source in spec.sources:
        for style in spec.styles:
            folder = folder_name(source, style)
            mapping_payload[folder] = {
                "source": source.name.lower(),
                "style": style.name.lower(),
            }
            name_rng = np.random.default_rng((seed, 1, int(source), int(style)))
            used_seeds: set[int] = set()
            for split_id, (split, count) in enumerate(split_sizes.items()):
                split_dir = out / split / folder
                split_dir.mkdir(parents=True, exist_ok=True)
                for index in range(count):
                    while True:
                        sample_seed = int(name_rng.integers(0, SEED_MAX + 1))
                        if sample_seed not in used_seeds:
                            used_seeds.add(sample_seed)
                            break
                    suffix = int(name_rng.integers(0, 1_000_000))
                    name = format_filename(class_of(source, style), sample_seed, suffix)
                    image_rng = np.random.default_rng(
                        (seed, 2, int(source), int(style), split_id, index)
                    )
                    pixels = render_toy_image(source, style, image_rng, spec.image_side)
                    _save_jpeg(pixels, split_dir / name)
                    records.append(
                        SampleRecord(
                            path=(Path(split) / folder / name).as_posix(),
                            split=split,
                            source=source,
                            style=style,
                            class_index_on_disk=class_of(source, style),
                            seed=sample_seed,
                            suffix=suffix,
                        )
                    )

    manifest = DatasetManifest(records=records)
    with open(out / MAPPING_FILENAME, "w", encoding="utf-8") as handle:
        json.dump(mapping_payload, handle, indent=2, sort_keys=True)
    with open(out / COUNTS_FILENAME, "w", encoding="utf-8") as handle:
        json.dump(
            {
                "mapping_version": manifest.mapping_version,
                "counts": counts_to_nested(manifest.counts()),
            },
            handle,
            indent=2,
            sort_keys=True,
        )
    with open(out / "toy-spec.json", "w", encoding="utf-8") as handle:
        json.dump({**asdict(spec), "seed": seed}, handle, indent=2, sort_keys=True)
    return manifest
