"""Adversarial patch training (expectation over placements/transforms) and
scale-sweep evaluation.

A patch is a square RGB tile with a centered disc mask. Applying it to a
host image replaces the pixels inside the transformed disc, resampling the
tile bilinearly for rotation and scale. The warp is linear in the tile's
pixel values, so the training loop backpropagates through it with the exact
adjoint of the forward interpolation weights.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .imaging import validate_image
from .models.gateway import EnsembleSpec, ModelPool


@dataclass(frozen=True)
class PatchTransform:
    rotation_deg: float
    scale: float              # fraction of the host's short side
    center: tuple[float, float]  # (row, col) of the disc center, host pixels

    def __post_init__(self):
        if not 0.0 < self.scale <= 1.0:
            raise ValueError("scale outside (0, 1]")


@dataclass(frozen=True)
class TransformDistribution:
    rotation_range: tuple[float, float] = (-45.0, 45.0)
    scale_range: tuple[float, float] = (0.2, 0.7)

    def __post_init__(self):
        if self.rotation_range[1] < self.rotation_range[0]:
            raise ValueError("empty rotation range")
        lo, hi = self.scale_range
        if not (0.0 < lo <= hi <= 1.0):
            raise ValueError("scale range must sit inside (0, 1]")


@dataclass
class PatchAsset:
    patch: np.ndarray           # (S, S, 3) in [0, 1]
    mask: np.ndarray            # (S, S) bool, centered disc
    target_class: int
    trained_against: EnsembleSpec | None
    seed: int
    training_curve: list[float] = field(default_factory=list)

    @property
    def side(self) -> int:
        return self.patch.shape[0]


def disc_mask(side: int) -> np.ndarray:
    c = (side - 1) / 2.0
    ys, xs = np.mgrid[0:side, 0:side]
    return (ys - c) ** 2 + (xs - c) ** 2 <= (side / 2.0) ** 2


def new_patch(side: int, target_class: int, seed: int,
              trained_against: EnsembleSpec | None = None) -> PatchAsset:
    """Mid-gray noise initialization (avoids clamp saturation at step 0)."""
    rng = np.random.default_rng(seed)
    return PatchAsset(
        patch=rng.uniform(0.4, 0.6, size=(side, side, 3)),
        mask=disc_mask(side),
        target_class=int(target_class),
        trained_against=trained_against,
        seed=int(seed),
    )


class PlacementError(ValueError):
    """Transformed disc does not fit inside the host image."""


def _warp_geometry(asset: PatchAsset, host_shape: tuple[int, int], t: PatchTransform):
    """Per-host-pixel patch coordinates plus the in-disc mask."""
    hh, hw = host_shape
    side = asset.side
    d = t.scale * min(hh, hw)          # disc diameter in host pixels
    lr, lc = t.center
    half = d / 2.0
    if lr - half < -0.5 or lc - half < -0.5 or lr + half > hh - 0.5 or lc + half > hw - 0.5:
        raise PlacementError(f"disc (center {t.center}, diameter {d:.1f}) leaves "
                             f"the {hh}x{hw} host")
    ys, xs = np.mgrid[0:hh, 0:hw].astype(np.float64)
    dy, dx = ys - lr, xs - lc
    th = np.deg2rad(t.rotation_deg)
    u = np.cos(th) * dx + np.sin(th) * dy      # inverse-rotated offsets
    v = -np.sin(th) * dx + np.cos(th) * dy
    inside = u * u + v * v <= half * half
    k = side / d
    cp = (side - 1) / 2.0
    pr = v * k + cp
    pc = u * k + cp
    return inside, pr, pc


def _bilinear_taps(pr, pc, side):
    """Integer corners and weights for clamped bilinear sampling."""
    r0 = np.clip(np.floor(pr).astype(int), 0, side - 1)
    c0 = np.clip(np.floor(pc).astype(int), 0, side - 1)
    r1 = np.minimum(r0 + 1, side - 1)
    c1 = np.minimum(c0 + 1, side - 1)
    fr = np.clip(pr - r0, 0.0, 1.0)
    fc = np.clip(pc - c0, 0.0, 1.0)
    w00 = (1 - fr) * (1 - fc)
    w01 = (1 - fr) * fc
    w10 = fr * (1 - fc)
    w11 = fr * fc
    return (r0, c0, r1, c1), (w00, w01, w10, w11)


def apply_patch(asset: PatchAsset, host: np.ndarray, t: PatchTransform) -> np.ndarray:
    """Replace host pixels inside the transformed disc with patch pixels."""
    host = validate_image(host)
    inside, pr, pc = _warp_geometry(asset, host.shape[:2], t)
    (r0, c0, r1, c1), (w00, w01, w10, w11) = _bilinear_taps(pr[inside], pc[inside], asset.side)
    p = asset.patch
    sampled = (w00[:, None] * p[r0, c0] + w01[:, None] * p[r0, c1]
               + w10[:, None] * p[r1, c0] + w11[:, None] * p[r1, c1])
    out = host.copy()
    out[inside] = sampled
    return out


def apply_patch_vjp(asset: PatchAsset, host_shape: tuple[int, int],
                    t: PatchTransform, grad_host: np.ndarray) -> np.ndarray:
    """Adjoint of apply_patch w.r.t. the patch pixels.

    grad_host is a gradient w.r.t. the patched host; the returned array is
    the exact gradient w.r.t. asset.patch under the same bilinear weights.
    """
    inside, pr, pc = _warp_geometry(asset, host_shape, t)
    (r0, c0, r1, c1), weights = _bilinear_taps(pr[inside], pc[inside], asset.side)
    g = np.asarray(grad_host, dtype=np.float64)[inside]
    out = np.zeros_like(asset.patch)
    for (rr, cc), w in zip(((r0, c0), (r0, c1), (r1, c0), (r1, c1)),
                           weights):
        np.add.at(out, (rr, cc), w[:, None] * g)
    return out


def sample_transform(dist: TransformDistribution, host_size: tuple[int, int],
                     rng: np.random.Generator) -> PatchTransform:
    """Uniform rotation/scale from the distribution, center uniform over all
    placements that keep the disc fully inside the host."""
    hh, hw = host_size
    theta = float(rng.uniform(*dist.rotation_range))
    s = float(rng.uniform(*dist.scale_range))
    d = s * min(hh, hw)
    half = d / 2.0
    r_lo, r_hi = half - 0.5, hh - 0.5 - half
    c_lo, c_hi = half - 0.5, hw - 0.5 - half
    if r_lo > r_hi or c_lo > c_hi:
        raise PlacementError(f"scale {s:.3f} leaves no valid center on a {hh}x{hw} host")
    center = (float(rng.uniform(r_lo, r_hi)), float(rng.uniform(c_lo, c_hi)))
    return PatchTransform(rotation_deg=theta, scale=s, center=center)


def train_patch(pool: ModelPool, target: int, ensemble: EnsembleSpec,
                images: np.ndarray, dist: TransformDistribution | None = None,
                steps: int = 1500, batch: int = 12, step_size: float = 1.0 / 32.0,
                seed: int = 0, side: int = 24) -> PatchAsset:
    """Stochastic sign-ascent on the Monte-Carlo estimate of the expected
    target log-probability over random hosts, placements, and transforms."""
    if len(images) == 0:
        raise ValueError("empty training image set")
    dist = dist or TransformDistribution()
    rng = np.random.default_rng(seed)
    asset = new_patch(side, target, seed, trained_against=ensemble)
    host_shape = images[0].shape[:2]
    curve = []

    for _ in range(int(steps)):
        idx = rng.integers(len(images), size=batch)
        transforms = [sample_transform(dist, host_shape, rng) for _ in range(batch)]
        patched = np.stack([apply_patch(asset, images[i], t)
                            for i, t in zip(idx, transforms)])
        grad_host = np.zeros_like(patched)
        obj = 0.0
        for mid in ensemble.member_ids:
            grad_host += pool.input_gradient_batch(mid, patched, target)
            probs = pool.predict_probs_batch(mid, patched)[:, target]
            obj += float(np.mean(np.log(np.maximum(probs, 1e-300))))
        grad_host /= len(ensemble.member_ids)
        curve.append(obj / len(ensemble.member_ids))

        grad_patch = np.zeros_like(asset.patch)
        for b, t in enumerate(transforms):
            grad_patch += apply_patch_vjp(asset, host_shape, t, grad_host[b])
        grad_patch /= batch
        asset.patch = np.clip(asset.patch + step_size * np.sign(grad_patch), 0.0, 1.0)

    asset.training_curve = curve
    return asset


@dataclass
class ScaleCurve:
    target_class: int
    model_id: str
    rows: list[dict]  # {scale, trials, successes, success_rate, skipped}

    def write_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=["scale", "trials", "successes",
                                              "success_rate", "skipped"])
            w.writeheader()
            w.writerows(self.rows)


def eval_patch_scale_curve(pool: ModelPool, asset: PatchAsset, model_id: str,
                           images: np.ndarray, scales, seed: int = 0,
                           rotation_range: tuple[float, float] = (-45.0, 45.0)
                           ) -> ScaleCurve:
    """Success rate of random placements per scale; success means the model's
    top class equals the patch target. Infeasible placements are skipped and
    counted, never silently dropped."""
    rng = np.random.default_rng(seed)
    rows = []
    for s in scales:
        if not 0.0 < s <= 1.0:
            raise ValueError(f"scale {s} outside (0, 1]")
        patched, skipped = [], 0
        for img in images:
            try:
                t = sample_transform(
                    TransformDistribution(rotation_range, (s, s)), img.shape[:2], rng)
            except PlacementError:
                skipped += 1
                continue
            patched.append(apply_patch(asset, img, t))
        successes = 0
        if patched:
            probs = pool.predict_probs_batch(model_id, np.stack(patched))
            successes = int((probs.argmax(axis=1) == asset.target_class).sum())
        trials = len(patched)
        rows.append({"scale": float(s), "trials": trials, "successes": successes,
                     "success_rate": successes / trials if trials else float("nan"),
                     "skipped": skipped})
    return ScaleCurve(asset.target_class, model_id, rows)
