"""Train and package the desk-scale fixture pool (3 tiny classifiers).

Run as a module to (re)build the committed fixtures directory:

    python -m capture.models.fixtures fixtures/

Writes one .pt weights file per model, labels.txt, registry.json, and an
exemplars.npz of held-out samples with their true labels and measured
per-model accuracy.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np
import torch

from . import nets
from .dataset import CLASS_NAMES, NUM_CLASSES, sample_batch
from .gateway import ModelPool, load_pool

DESK_MODELS = [
    ("conv-a", "tiny-conv-a", 11),
    ("conv-b", "tiny-conv-b", 22),
    ("conv-c", "tiny-conv-c", 33),
]

PREPROCESSING = {"mean": [0.5, 0.5, 0.5], "scale": [0.5, 0.5, 0.5]}


def _train_one(arch: str, seed: int, n_train: int = 5000, epochs: int = 14,
               batch: int = 64) -> torch.nn.Module:
    torch.manual_seed(seed)
    net = nets.build(arch, num_classes=NUM_CLASSES)
    net.train()
    imgs, labels = sample_batch(n_train, seed=seed)
    x = torch.from_numpy(imgs).permute(0, 3, 1, 2)
    x = (x - 0.5) / 0.5
    y = torch.from_numpy(labels)
    opt = torch.optim.Adam(net.parameters(), lr=2e-3)
    # Smoothed targets keep host-class logit margins bounded; without this the
    # tiny nets memorize the synthetic set with margins in the dozens of logits
    # and no in-image evidence can outvote the host.
    loss_fn = torch.nn.CrossEntropyLoss(label_smoothing=0.05)
    order = np.arange(n_train)
    rng = np.random.default_rng(seed)
    for _ in range(epochs):
        rng.shuffle(order)
        for i in range(0, n_train, batch):
            idx = order[i:i + batch]
            opt.zero_grad()
            loss = loss_fn(net(x[idx]), y[idx])
            loss.backward()
            opt.step()
    net.eval()
    return net


def build_fixtures(out_dir: str | Path, n_eval: int = 500) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    entries = []
    for model_id, arch, seed in DESK_MODELS:
        net = _train_one(arch, seed)
        weights = f"{model_id}.pt"
        torch.save(net.state_dict(), out / weights)
        entries.append({
            "id": model_id,
            "adapter": arch,
            "weights": weights,
            "input_size": [32, 32],
            "label_count": NUM_CLASSES,
            "preprocessing": PREPROCESSING,
        })

    (out / "labels.txt").write_text("\n".join(CLASS_NAMES) + "\n")
    (out / "registry.json").write_text(json.dumps(
        {"label_file": "labels.txt", "models": entries}, indent=2))

    pool = load_pool(out / "registry.json")
    eval_imgs, eval_labels = sample_batch(n_eval, seed=777)
    acc = {}
    for mid in pool.ids:
        probs = pool.predict_probs_batch(mid, eval_imgs)
        acc[mid] = float((probs.argmax(axis=1) == eval_labels).mean())

    np.savez_compressed(out / "exemplars.npz",
                        images=eval_imgs[:50], labels=eval_labels[:50])
    (out / "accuracy.json").write_text(json.dumps(acc, indent=2))
    return acc


def desk_pool(fixtures_dir: str | Path) -> ModelPool:
    return load_pool(Path(fixtures_dir) / "registry.json")


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else "fixtures"
    accuracies = build_fixtures(target)
    print(json.dumps(accuracies, indent=2))
