"""Tiny desk-scale network architectures for the fixture classifier pool.

All nets run in float64 and use smooth activations so input gradients are
well defined everywhere (finite-difference checks stay clean).
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn


class GridSensitiveHead(nn.Module):
    """Frozen logit head that reacts to pixel-exact structure.

    Features sin(omega * u_k . x + b_k) over sparse random pixel supports are
    stable when the input reaches the model byte-identically but decorrelate
    under any resampling of the pixel grid. Mixing them into the logits makes
    the desk-scale pool brittle the way large ImageNet models are: attacks
    that tune exact pixel values stop working after a resize, while smooth
    (coordinate-encoded) images are unaffected.
    """

    def __init__(self, num_classes: int, input_dim: int, seed: int,
                 n_features: int = 48, support: int = 24,
                 omega: float = 25.0, logit_scale: float = 0.16):
        super().__init__()
        rng = np.random.default_rng(seed)
        proj = np.zeros((n_features, input_dim))
        for k in range(n_features):
            idx = rng.choice(input_dim, size=support, replace=False)
            proj[k, idx] = rng.choice([-1.0, 1.0], size=support) / np.sqrt(support)
        self.register_buffer("proj", torch.from_numpy(proj))
        self.register_buffer("phase", torch.from_numpy(rng.uniform(0, 2 * np.pi, n_features)))
        self.register_buffer("mix", torch.from_numpy(
            rng.normal(0.0, logit_scale, (num_classes, n_features))))
        self.omega = omega

    def forward(self, x_unit: torch.Tensor) -> torch.Tensor:
        """x_unit: (N, 3, H, W) in [0, 1] at the model's input size."""
        flat = x_unit.reshape(x_unit.shape[0], -1)
        feats = torch.sin(self.omega * flat @ self.proj.T + self.phase)
        return feats @ self.mix.T


class _SpatialLogSumExp(nn.Module):
    """Soft max-pool over spatial positions of per-class score maps.

    Salience-style pooling: one locally confident region can carry the whole
    logit, the way a small salient object carries an ImageNet prediction.
    """

    def __init__(self, tau: float = 1.0):
        super().__init__()
        self.tau = tau

    def forward(self, score_maps):  # (N, C, H, W) -> (N, C)
        flat = score_maps.flatten(2) / self.tau
        return self.tau * torch.logsumexp(flat, dim=2)


class TinyConvA(nn.Module):
    def __init__(self, num_classes: int = 10):
        super().__init__()
        self.features = nn.Sequential(
            nn.Conv2d(3, 16, 3, padding=1), nn.ELU(),
            nn.AvgPool2d(2),
            nn.Conv2d(16, 32, 3, padding=1), nn.ELU(),
            nn.AvgPool2d(2),
            nn.Conv2d(32, num_classes, 1),
        )
        self.pool = _SpatialLogSumExp()

    def forward(self, x):
        return self.pool(self.features(x))


class TinyConvB(nn.Module):
    def __init__(self, num_classes: int = 10):
        super().__init__()
        self.features = nn.Sequential(
            nn.Conv2d(3, 12, 5, padding=2), nn.Tanh(),
            nn.AvgPool2d(4),
            nn.Conv2d(12, 24, 3, padding=1), nn.Tanh(),
            nn.Conv2d(24, num_classes, 1),
        )
        self.pool = _SpatialLogSumExp()

    def forward(self, x):
        return self.pool(self.features(x))


class TinyConvC(nn.Module):
    def __init__(self, num_classes: int = 10):
        super().__init__()
        self.features = nn.Sequential(
            nn.Conv2d(3, 24, 7, stride=2, padding=3), nn.ELU(),
            nn.Conv2d(24, 48, 3, padding=1), nn.ELU(),
            nn.AvgPool2d(2),
            nn.Conv2d(48, num_classes, 1),
        )
        self.pool = _SpatialLogSumExp()

    def forward(self, x):
        return self.pool(self.features(x))


class GridSensitiveNet(nn.Module):
    """Base classifier plus the frozen grid-sensitive logit head.

    Assumes the (0.5, 0.5) normalization used by the fixture pool so the
    head can recover the unit-interval input from the normalized tensor.
    """

    def __init__(self, base: nn.Module, num_classes: int, side: int, seed: int):
        super().__init__()
        self.base = base
        self.grid_head = GridSensitiveHead(num_classes, 3 * side * side, seed=seed)

    def forward(self, x):
        x_unit = x * 0.5 + 0.5
        return self.base(x) + self.grid_head(x_unit)


ARCHITECTURES = {
    "tiny-conv-a": TinyConvA,
    "tiny-conv-b": TinyConvB,
    "tiny-conv-c": TinyConvC,
}

_HEAD_SEEDS = {"tiny-conv-a": 101, "tiny-conv-b": 202, "tiny-conv-c": 303}


def build(arch: str, num_classes: int = 10, side: int = 32) -> nn.Module:
    base = ARCHITECTURES[arch](num_classes=num_classes)
    net = GridSensitiveNet(base, num_classes, side, seed=_HEAD_SEEDS[arch])
    return net.double()


def load_weights(net: nn.Module, path) -> nn.Module:
    state = torch.load(path, map_location="cpu", weights_only=True)
    net.load_state_dict(state)
    net.eval()
    return net
