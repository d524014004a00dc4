"""Classifier adapters: a uniform predict / input-gradient surface.

Adapters own resizing to the model's input size and per-channel
normalization, so callers can feed unit-interval images of any size.
Gradients are taken with respect to the caller's image, i.e. they flow back
through the adapter's own bilinear resize.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F

from ..imaging import validate_image


class CapabilityError(RuntimeError):
    """Adapter cannot perform the requested operation (e.g. no gradients)."""


class Adapter:
    """Base adapter contract."""

    differentiable: bool = False
    label_count: int
    input_size: tuple[int, int]

    def predict_batch(self, imgs: np.ndarray) -> np.ndarray:
        """imgs (N,H,W,3) in [0,1] -> probability rows (N, label_count)."""
        raise NotImplementedError

    def input_gradient_batch(self, imgs: np.ndarray, target: int) -> np.ndarray:
        """d log probs[target] / d imgs, shaped like imgs."""
        raise CapabilityError(f"{type(self).__name__} has no input gradients")


class TorchAdapter(Adapter):
    """Wraps a torch module running in float64 on CPU."""

    differentiable = True

    def __init__(self, net: torch.nn.Module, input_size=(32, 32),
                 mean=(0.5, 0.5, 0.5), scale=(0.5, 0.5, 0.5), label_count=10):
        self.net = net.double().eval()
        self.input_size = (int(input_size[0]), int(input_size[1]))
        self.label_count = int(label_count)
        self._mean = torch.tensor(mean, dtype=torch.float64).view(1, 3, 1, 1)
        self._scale = torch.tensor(scale, dtype=torch.float64).view(1, 3, 1, 1)

    def _prepare(self, imgs: np.ndarray) -> torch.Tensor:
        arr = np.asarray(imgs, dtype=np.float64)
        if arr.ndim == 3:
            arr = arr[None]
        x = torch.from_numpy(arr).permute(0, 3, 1, 2)
        if x.shape[-2:] != self.input_size:
            x = F.interpolate(x, size=self.input_size, mode="bilinear", align_corners=False)
        return (x - self._mean) / self._scale

    def _log_probs(self, x: torch.Tensor) -> torch.Tensor:
        return F.log_softmax(self.net(x), dim=1)

    def predict_batch(self, imgs: np.ndarray) -> np.ndarray:
        with torch.no_grad():
            logp = self._log_probs(self._prepare(imgs))
        return logp.exp().numpy()

    def input_gradient_batch(self, imgs: np.ndarray, target: int) -> np.ndarray:
        arr = np.asarray(imgs, dtype=np.float64)
        squeeze = arr.ndim == 3
        if squeeze:
            arr = arr[None]
        x = torch.from_numpy(arr).requires_grad_(True)
        xc = x.permute(0, 3, 1, 2)
        if xc.shape[-2:] != self.input_size:
            xc = F.interpolate(xc, size=self.input_size, mode="bilinear", align_corners=False)
        xc = (xc - self._mean) / self._scale
        logp = self._log_probs(xc)[:, int(target)].sum()
        (grad,) = torch.autograd.grad(logp, x)
        g = grad.numpy()
        return g[0] if squeeze else g


class ConstantAdapter(Adapter):
    """Always returns the same probability row. Declares itself
    non-differentiable so gradient-based attacks fail loudly instead of
    silently climbing a zero gradient."""

    differentiable = False

    def __init__(self, probs, input_size=(32, 32)):
        p = np.asarray(probs, dtype=np.float64)
        self._probs = p / p.sum()
        self.label_count = p.size
        self.input_size = input_size

    def predict_batch(self, imgs: np.ndarray) -> np.ndarray:
        n = 1 if np.asarray(imgs).ndim == 3 else len(imgs)
        return np.tile(self._probs, (n, 1))

    def input_gradient_batch(self, imgs: np.ndarray, target: int) -> np.ndarray:
        raise CapabilityError("constant stub has no input gradients")


class MeanBrightnessAdapter(Adapter):
    """Deterministic toy classifier driven by mean image brightness.

    Differentiable in closed form; handy for tests that need a nontrivial
    but fully predictable model without torch.
    """

    differentiable = True

    def __init__(self, label_count=10, sharpness=8.0, input_size=(32, 32)):
        self.label_count = int(label_count)
        self.sharpness = float(sharpness)
        self.input_size = input_size

    def _logits(self, imgs: np.ndarray) -> np.ndarray:
        m = imgs.reshape(len(imgs), -1).mean(axis=1)  # (N,)
        centers = (np.arange(self.label_count) + 0.5) / self.label_count
        return -self.sharpness * (m[:, None] - centers[None, :]) ** 2

    def predict_batch(self, imgs: np.ndarray) -> np.ndarray:
        arr = np.asarray(imgs, dtype=np.float64)
        if arr.ndim == 3:
            arr = arr[None]
        z = self._logits(arr)
        z -= z.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def input_gradient_batch(self, imgs: np.ndarray, target: int) -> np.ndarray:
        arr = np.asarray(imgs, dtype=np.float64)
        squeeze = arr.ndim == 3
        if squeeze:
            arr = arr[None]
        probs = self.predict_batch(arr)
        m = arr.reshape(len(arr), -1).mean(axis=1)
        centers = (np.arange(self.label_count) + 0.5) / self.label_count
        dz_dm = -2.0 * self.sharpness * (m[:, None] - centers[None, :])
        # d log p_t / dm = dz_t/dm - sum_k p_k dz_k/dm; dm/dpixel = 1/npix
        dlogp_dm = dz_dm[:, int(target)] - (probs * dz_dm).sum(axis=1)
        npix = arr[0].size
        g = (dlogp_dm / npix)[:, None, None, None] * np.ones_like(arr)
        return g[0] if squeeze else g
