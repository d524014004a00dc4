"""Canonical image representation, PNG I/O, and attack-style transforms.

An image is a float64 numpy array of shape (H, W, 3) with values in [0, 1].
That array is the single currency every other module trades in; per-model
normalization happens inside the classifier adapters, never here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np
from PIL import Image


class ImageFormatError(ValueError):
    """Raised for files that are not 8-bit RGB PNGs."""


def validate_image(img: np.ndarray) -> np.ndarray:
    """Check shape/range invariants and return the array unchanged."""
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) array, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"degenerate image size {arr.shape[:2]}")
    if arr.dtype != np.float64:
        arr = arr.astype(np.float64)
    if not np.isfinite(arr).all():
        raise ValueError("image contains non-finite values")
    lo, hi = float(arr.min()), float(arr.max())
    if lo < 0.0 or hi > 1.0:
        raise ValueError(f"values outside [0, 1]: min={lo}, max={hi}")
    return arr


def quantize_to_bytes(img: np.ndarray) -> np.ndarray:
    """Unit-interval floats to bytes, rounding half up."""
    arr = validate_image(img)
    return np.floor(arr * 255.0 + 0.5).clip(0, 255).astype(np.uint8)


def load_image(path: str | Path) -> np.ndarray:
    """Load an 8-bit RGB PNG; values are stored bytes divided by 255, exactly."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with Image.open(path) as im:
        if im.format != "PNG":
            raise ImageFormatError(f"{path}: not a PNG (format={im.format})")
        if im.mode != "RGB":
            raise ImageFormatError(f"{path}: mode {im.mode}, need 8-bit RGB")
        arr = np.asarray(im, dtype=np.uint8)
    return arr.astype(np.float64) / 255.0


def save_image(img: np.ndarray, path: str | Path) -> None:
    """Write an 8-bit RGB PNG. load(save(img)) reproduces each byte exactly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(quantize_to_bytes(img), mode="RGB").save(path, format="PNG")


TRANSFORM_KINDS = ("resize", "gaussian-blur", "jpeg-requantize")


@dataclass(frozen=True)
class TransformSpec:
    """One image-processing step used as a robustness attack on assets.

    kind "resize" -> params {"height": int, "width": int}
    kind "gaussian-blur" -> params {"sigma": float}  (pixels)
    kind "jpeg-requantize" -> params {"quality": int in [1, 100]}
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in TRANSFORM_KINDS:
            raise ValueError(f"unknown transform kind {self.kind!r}")
        if self.kind == "resize":
            h, w = int(self.params["height"]), int(self.params["width"])
            if h < 1 or w < 1:
                raise ValueError(f"degenerate resize target {h}x{w}")
        elif self.kind == "gaussian-blur":
            if float(self.params["sigma"]) <= 0:
                raise ValueError("blur sigma must be > 0")
        elif self.kind == "jpeg-requantize":
            q = int(self.params["quality"])
            if not 1 <= q <= 100:
                raise ValueError(f"jpeg quality {q} outside [1, 100]")


def resize(img: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize to (height, width)."""
    return apply_transform(img, TransformSpec("resize", {"height": height, "width": width}))


def apply_transform(img: np.ndarray, spec: TransformSpec) -> np.ndarray:
    arr = validate_image(img)
    if spec.kind == "resize":
        h, w = int(spec.params["height"]), int(spec.params["width"])
        out = cv2.resize(arr, (w, h), interpolation=cv2.INTER_LINEAR)
    elif spec.kind == "gaussian-blur":
        sigma = float(spec.params["sigma"])
        out = cv2.GaussianBlur(arr, ksize=(0, 0), sigmaX=sigma, sigmaY=sigma)
    else:  # jpeg-requantize
        q = int(spec.params["quality"])
        bgr = cv2.cvtColor(quantize_to_bytes(arr), cv2.COLOR_RGB2BGR)
        ok, buf = cv2.imencode(".jpg", bgr, [cv2.IMWRITE_JPEG_QUALITY, q])
        if not ok:
            raise RuntimeError("jpeg encode failed")
        decoded = cv2.imdecode(buf, cv2.IMREAD_COLOR)
        out = cv2.cvtColor(decoded, cv2.COLOR_BGR2RGB).astype(np.float64) / 255.0
    return np.clip(out, 0.0, 1.0)
