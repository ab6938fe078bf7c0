"""Load manifest records into model-ready arrays."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..labels import class_of
from ..preprocess import PreprocessConfig, decode_image, preprocess
from .manifest import DatasetManifest, SampleRecord


def load_records(
    root: str | Path,
    records: list[SampleRecord],
    config: PreprocessConfig,
    contrast_percent: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Decode and preprocess records into (N, 3, S, S) images + class targets."""
    root = Path(root)
    images = np.empty((len(records), 3, config.target_side, config.target_side), dtype=np.float32)
    targets = np.empty(len(records), dtype=np.int64)
    for i, record in enumerate(records):
        with open(root / record.path, "rb") as handle:
            raster = decode_image(handle.read())
        images[i] = preprocess(raster, config, contrast_percent=contrast_percent).data
        targets[i] = class_of(record.source, record.style)
    return images, targets


def load_split(
    root: str | Path,
    manifest: DatasetManifest,
    split: str,
    config: PreprocessConfig,
    contrast_percent: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    records = [record for record in manifest.records if record.split == split]
    return load_records(root, records, config, contrast_percent=contrast_percent)
