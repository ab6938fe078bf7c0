import io

import numpy as np
import pytest
from PIL import Image

from artbrain.errors import FormatError
from artbrain.preprocess import (
    ImageTensor,
    PreprocessConfig,
    adjust_contrast,
    decode_image,
    preprocess,
    resize_and_crop,
)


def _encode(raster: np.ndarray, fmt: str) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(raster, mode="RGB").save(buf, format=fmt)
    return buf.getvalue()


def test_decode_jpeg_and_png(rng):
    raster = rng.integers(0, 256, size=(40, 56, 3), dtype=np.uint8)
    png = decode_image(_encode(raster, "PNG"))
    np.testing.assert_array_equal(png, raster)  # PNG is lossless
    jpg = decode_image(_encode(raster, "JPEG"))
    assert jpg.shape == raster.shape and jpg.dtype == np.uint8


def test_decode_rejects_garbage():
    with pytest.raises(FormatError):
        decode_image(b"not an image at all")
    with pytest.raises(FormatError):
        decode_image(b"")


def test_config_validation():
    with pytest.raises(ValueError):
        PreprocessConfig(target_side=8)
    with pytest.raises(ValueError):
        PreprocessConfig(channel_stds=(0.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        PreprocessConfig(resize_filter="nearest")


def test_geometry_contract_512x256():
    raster = np.zeros((256, 512, 3), dtype=np.uint8)
    out = resize_and_crop(raster, 224)
    assert out.shape == (224, 224, 3)
    tensor = preprocess(raster, PreprocessConfig(target_side=224))
    assert tensor.data.shape == (3, 224, 224)


def test_geometry_identity_fast_path(rng):
    raster = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
    out = resize_and_crop(raster, 64)
    np.testing.assert_array_equal(out, raster)


def test_geometry_idempotent(rng):
    raster = rng.integers(0, 256, size=(100, 70, 3), dtype=np.uint8)
    once = resize_and_crop(raster, 64)
    twice = resize_and_crop(once, 64)
    np.testing.assert_array_equal(once, twice)


def test_mid_gray_normalizes_to_zero():
    raster = np.full((32, 32, 3), 128, dtype=np.uint8)
    config = PreprocessConfig(
        target_side=32,
        channel_means=(128 / 255, 128 / 255, 128 / 255),
        channel_stds=(0.5, 0.5, 0.5),
    )
    tensor = preprocess(raster, config)
    np.testing.assert_allclose(tensor.data, 0.0, atol=1e-6)


def test_normalization_matches_per_pixel_oracle(rng):
    raster = rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
    config = PreprocessConfig(target_side=32)
    tensor = preprocess(raster, config)
    for c in range(3):
        for y in range(0, 32, 7):
            for x in range(0, 32, 7):
                expected = (raster[y, x, c] / 255.0 - config.channel_means[c]) / config.channel_stds[c]
                assert tensor.data[c, y, x] == pytest.approx(expected, abs=1e-6)


def test_image_tensor_validation():
    with pytest.raises(ValueError):
        ImageTensor(data=np.zeros((1, 4, 4), dtype=np.float32))
    with pytest.raises(ValueError):
        ImageTensor(data=np.full((3, 4, 4), np.nan, dtype=np.float32))


def test_preprocess_rejects_bad_rasters(rng):
    with pytest.raises(FormatError):
        preprocess(np.zeros((10, 10), dtype=np.uint8))
    with pytest.raises(FormatError):
        preprocess(np.zeros((10, 10, 4), dtype=np.uint8))
    with pytest.raises(FormatError):
        preprocess(np.zeros((0, 10, 3), dtype=np.uint8))
    with pytest.raises(FormatError):
        preprocess(np.zeros((10, 10, 3), dtype=np.float32))


def test_contrast_examples():
    raster = np.array([[[0.75, 0.25, 0.5]]], dtype=np.float32)
    np.testing.assert_allclose(adjust_contrast(raster, -100.0), 0.5)
    np.testing.assert_allclose(adjust_contrast(raster, 0.0), raster)
    boosted = adjust_contrast(np.full((2, 2, 3), 0.75, dtype=np.float32), 100.0)
    np.testing.assert_allclose(boosted, 1.0)


def test_contrast_range_check():
    raster = np.full((2, 2, 3), 0.5, dtype=np.float32)
    with pytest.raises(ValueError):
        adjust_contrast(raster, 101.0)
    with pytest.raises(ValueError):
        adjust_contrast(raster, -100.1)
    with pytest.raises(ValueError):
        adjust_contrast(np.full((2, 2, 3), 1.25, dtype=np.float32), 10.0)


def test_contrast_monotone_per_pixel(rng):
    a = rng.uniform(0, 1, size=(8, 8, 3)).astype(np.float32)
    b = np.clip(a + rng.uniform(0, 0.2, size=a.shape).astype(np.float32), 0, 1)
    for percent in (-60.0, -20.0, 30.0, 90.0):
        fa = adjust_contrast(a, percent)
        fb = adjust_contrast(b, percent)
        assert np.all(fb >= fa - 1e-7)


def test_contrast_factor_recorded(rng):
    raster = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
    tensor = preprocess(raster, PreprocessConfig(target_side=64), contrast_percent=-50.0)
    assert tensor.contrast_factor_applied == pytest.approx(0.5)
    assert tensor.normalized


def test_contrast_zero_leaves_pipeline_identical(rng):
    raster = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
    config = PreprocessConfig(target_side=64)
    a = preprocess(raster, config, contrast_percent=0.0)
    b = preprocess(raster, config)
    np.testing.assert_array_equal(a.data, b.data)


def test_normalization_invariants_fuzz(rng):
    # post-normalization values must be finite and within the achievable
    # bounds of the affine map for every channel
    config = PreprocessConfig(target_side=32)
    lo = min((0.0 - m) / s for m, s in zip(config.channel_means, config.channel_stds))
    hi = max((1.0 - m) / s for m, s in zip(config.channel_means, config.channel_stds))
    for _ in range(50):
        h = int(rng.integers(32, 80))
        w = int(rng.integers(32, 80))
        raster = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
        tensor = preprocess(raster, config, contrast_percent=float(rng.uniform(-100, 100)))
        assert np.all(np.isfinite(tensor.data))
        assert tensor.data.min() >= lo - 1e-5
        assert tensor.data.max() <= hi + 1e-5
