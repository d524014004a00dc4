"""Synthetic 10-class 32x32 image dataset used to train the desk-scale pool.

Each class is a distinct geometric/color pattern rendered with random jitter
(position, hue, background, noise), easy for humans to name and for a tiny
network to learn to >95% accuracy in seconds.
"""

from __future__ import annotations

import numpy as np

CLASS_NAMES = [
    "flagpole",
    "theater curtain",
    "hammer",
    "camera",
    "basketball",
    "strawberry",
    "lighthouse",
    "umbrella",
    "traffic light",
    "sunflower",
]

NUM_CLASSES = len(CLASS_NAMES)
IMAGE_SIDE = 32


def _coords(side):
    ys, xs = np.mgrid[0:side, 0:side].astype(np.float64)
    return ys, xs


def _disc(ys, xs, cy, cx, r):
    return (ys - cy) ** 2 + (xs - cx) ** 2 <= r * r


def render_class(label: int, rng: np.random.Generator, side: int = IMAGE_SIDE) -> np.ndarray:
    """Render one sample of `label` at the given side length."""
    s = side / 32.0  # geometry scale relative to the nominal 32px canvas
    ys, xs = _coords(side)
    img = np.empty((side, side, 3))
    img[:] = rng.uniform(0.05, 0.35, size=3)  # dark-ish background
    img += rng.normal(0.0, 0.02, size=img.shape)

    def paint(mask, color):
        img[mask] = color

    jx = rng.uniform(-4, 4) * s
    jy = rng.uniform(-4, 4) * s

    if label == 0:  # flagpole: thin bright vertical pole, small flag at top
        px = side // 2 + jx
        pole = np.abs(xs - px) <= max(1.0, 0.8 * s)
        paint(pole, [0.85, 0.85, 0.9])
        flag = (ys < 10 * s + jy) & (xs > px) & (xs < px + 10 * s) & (ys > 3 * s + jy)
        paint(flag, [0.9, rng.uniform(0.0, 0.2), 0.1])
    elif label == 1:  # theater curtain: vertical red drape stripes
        phase = rng.uniform(0, 2 * np.pi)
        wave = 0.5 + 0.5 * np.sin(xs / s * rng.uniform(0.8, 1.3) + phase)
        img[:] = np.stack([0.45 + 0.45 * wave, 0.08 * wave, 0.10 * wave], axis=-1)
        img += rng.normal(0.0, 0.02, size=img.shape)
    elif label == 2:  # hammer: gray head bar over a brown vertical handle
        cy, cx = 9 * s + jy, side / 2 + jx
        head = (np.abs(ys - cy) <= 3 * s) & (np.abs(xs - cx) <= 9 * s)
        handle = (np.abs(xs - cx) <= 1.6 * s) & (ys >= cy) & (ys <= cy + 18 * s)
        paint(handle, [0.55, 0.35, 0.15])
        paint(head, [0.65, 0.65, 0.70])
    elif label == 3:  # camera: dark body with a bright centered lens ring
        cy, cx = side / 2 + jy / 2, side / 2 + jx / 2
        body = (np.abs(ys - cy) <= 9 * s) & (np.abs(xs - cx) <= 12 * s)
        paint(body, [0.12, 0.12, 0.14])
        paint(_disc(ys, xs, cy, cx, 6 * s), [0.7, 0.75, 0.9])
        paint(_disc(ys, xs, cy, cx, 3 * s), [0.1, 0.12, 0.25])
    elif label == 4:  # basketball: orange ball with dark seam cross
        cy, cx = side / 2 + jy / 2, side / 2 + jx / 2
        r = rng.uniform(9, 12) * s
        ball = _disc(ys, xs, cy, cx, r)
        paint(ball, [0.95, 0.45, 0.05])
        seams = ball & ((np.abs(ys - cy) <= 0.8 * s) | (np.abs(xs - cx) <= 0.8 * s))
        paint(seams, [0.15, 0.08, 0.02])
    elif label == 5:  # strawberry: red disc flecked with yellow seeds
        cy, cx = side / 2 + jy / 2, side / 2 + jx / 2
        r = rng.uniform(9, 12) * s
        paint(_disc(ys, xs, cy, cx, r), [0.85, 0.10, 0.12])
        n = max(8, int(14 * s * s))
        for _ in range(n):
            a, rr = rng.uniform(0, 2 * np.pi), rng.uniform(0, 0.8) * r
            sy, sx = cy + rr * np.sin(a), cx + rr * np.cos(a)
            paint(_disc(ys, xs, sy, sx, 0.7 * s), [0.95, 0.9, 0.3])
    elif label == 6:  # lighthouse: column of alternating red/white bands
        cx = side / 2 + jx
        col = np.abs(xs - cx) <= 5 * s
        band = ((ys / (4 * s) + rng.uniform(0, 2)).astype(int) % 2) == 0
        paint(col & band, [0.92, 0.12, 0.12])
        paint(col & ~band, [0.95, 0.95, 0.95])
    elif label == 7:  # umbrella: colored canopy semicircle over a thin stem
        cy, cx = 14 * s + jy / 2, side / 2 + jx
        r = rng.uniform(10, 13) * s
        canopy = _disc(ys, xs, cy, cx, r) & (ys <= cy)
        hue = rng.uniform(0, 1)
        paint(canopy, [0.3 + 0.6 * hue, 0.2, 0.9 - 0.6 * hue])
        wedge = canopy & (np.abs(xs - cx) <= 2 * s)
        paint(wedge, [0.9, 0.85, 0.2])
        stem = (np.abs(xs - cx) <= 0.8 * s) & (ys > cy) & (ys < cy + 14 * s)
        paint(stem, [0.2, 0.2, 0.2])
    elif label == 8:  # traffic light: dark box with red/amber/green discs
        cy, cx = side / 2 + jy / 2, side / 2 + jx / 2
        box = (np.abs(ys - cy) <= 12 * s) & (np.abs(xs - cx) <= 5 * s)
        paint(box, [0.08, 0.08, 0.08])
        for k, color in enumerate(([0.9, 0.1, 0.1], [0.9, 0.7, 0.1], [0.1, 0.8, 0.2])):
            paint(_disc(ys, xs, cy + (k - 1) * 7 * s, cx, 2.8 * s), color)
    else:  # sunflower: yellow petals around a brown center
        cy, cx = side / 2 + jy / 2, side / 2 + jx / 2
        r = rng.uniform(10, 13) * s
        ang = np.arctan2(ys - cy, xs - cx)
        petal = _disc(ys, xs, cy, cx, r) & (np.cos(8 * ang + rng.uniform(0, np.pi)) > -0.3)
        paint(petal, [0.95, 0.82, 0.1])
        paint(_disc(ys, xs, cy, cx, 0.45 * r), [0.35, 0.2, 0.05])

    return np.clip(img, 0.0, 1.0)


def sample_batch(n: int, seed: int, side: int = IMAGE_SIDE,
                 labels: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """n labeled samples; labels cycle through classes unless given."""
    rng = np.random.default_rng(seed)
    if labels is None:
        labels = np.arange(n) % NUM_CLASSES
        rng.shuffle(labels)
    labels = np.asarray(labels, dtype=np.int64)
    imgs = np.stack([render_class(int(y), rng, side) for y in labels])
    return imgs, labels
