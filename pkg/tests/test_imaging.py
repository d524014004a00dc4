from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capture.imaging import (ImageFormatError, TransformSpec, apply_transform,
                             load_image, quantize_to_bytes, save_image,
                             validate_image)


def _rand_image(rng, h=16, w=16):
    return rng.random((h, w, 3))


def test_validate_rejects_bad_shapes():
    with pytest.raises(ValueError):
        validate_image(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        validate_image(np.zeros((4, 4, 4)))
    with pytest.raises(ValueError):
        validate_image(np.full((4, 4, 3), 1.5))
    with pytest.raises(ValueError):
        validate_image(np.full((4, 4, 3), np.nan))


def test_quantize_rounds_half_up():
    # 0.5/255 is exactly on the boundary: floor(0.5 + 0.5) = 1
    img = np.full((1, 1, 3), 0.5 / 255)
    assert quantize_to_bytes(img)[0, 0, 0] == 1
    img = np.full((1, 1, 3), 0.49 / 255)
    assert quantize_to_bytes(img)[0, 0, 0] == 0
    assert quantize_to_bytes(np.ones((1, 1, 3)))[0, 0, 0] == 255


def test_png_round_trip_is_exact_after_quantization(tmp_path):
    rng = np.random.default_rng(0)
    img = _rand_image(rng)
    path = tmp_path / "x.png"
    save_image(img, path)
    back = load_image(path)
    # once quantized, a second trip through PNG changes nothing
    assert np.array_equal(quantize_to_bytes(back), quantize_to_bytes(img))
    save_image(back, path)
    assert np.array_equal(load_image(path), back)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_quantize_inverse_property(seed):
    rng = np.random.default_rng(seed)
    b = rng.integers(0, 256, size=(4, 4, 3), dtype=np.uint8)
    assert np.array_equal(quantize_to_bytes(b.astype(np.float64) / 255.0), b)


def test_transform_spec_validation():
    with pytest.raises(ValueError):
        TransformSpec("sharpen", {})
    with pytest.raises(ValueError):
        TransformSpec("resize", {"height": 0, "width": 10})
    with pytest.raises(ValueError):
        TransformSpec("jpeg-requantize", {"quality": 0})
    with pytest.raises(ValueError):
        TransformSpec("gaussian-blur", {"sigma": -1.0})


def test_resize_changes_shape_and_stays_in_range():
    rng = np.random.default_rng(1)
    img = _rand_image(rng, 32, 32)
    out = apply_transform(img, TransformSpec("resize", {"height": 48, "width": 40}))
    assert out.shape == (48, 40, 3)
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_identity_resize_preserves_image():
    rng = np.random.default_rng(2)
    img = _rand_image(rng, 20, 20)
    out = apply_transform(img, TransformSpec("resize", {"height": 20, "width": 20}))
    assert np.allclose(out, img, atol=1e-12)


def test_blur_reduces_variance():
    rng = np.random.default_rng(3)
    img = _rand_image(rng, 32, 32)
    out = apply_transform(img, TransformSpec("gaussian-blur", {"sigma": 2.0}))
    assert out.var() < img.var()
    assert out.shape == img.shape


def test_jpeg_requantize_round_trips_shape():
    rng = np.random.default_rng(4)
    img = _rand_image(rng, 32, 32)
    out = apply_transform(img, TransformSpec("jpeg-requantize", {"quality": 60}))
    assert out.shape == img.shape
    assert out.min() >= 0.0 and out.max() <= 1.0
    # lossy: almost surely not identical
    assert not np.array_equal(out, img)
