"""Uniform access to a pool of classifiers, ensembles, and hold-one-out splits.

The pool is described by a registry JSON file:

    {"label_file": "labels.txt",
     "models": [{"id": "...", "adapter": "tiny-conv-a", "weights": "....pt",
                 "input_size": [32, 32], "label_count": 10,
                 "preprocessing": {"mean": [...], "scale": [...]}}]}

Paths are resolved relative to the registry file's directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..imaging import validate_image
from . import nets
from .adapters import Adapter, CapabilityError, ConstantAdapter, TorchAdapter


@dataclass(frozen=True)
class ClassifierHandle:
    id: str
    input_size: tuple[int, int]
    label_count: int
    preprocessing: dict
    adapter: Adapter

    @property
    def differentiable(self) -> bool:
        return self.adapter.differentiable


@dataclass(frozen=True)
class Prediction:
    probs: np.ndarray
    top_class: int
    top_confidence: float


AGGREGATIONS = ("mean-confidence", "min-confidence")


@dataclass(frozen=True)
class EnsembleSpec:
    member_ids: tuple[str, ...]
    held_out_id: str | None = None
    aggregation: str = "mean-confidence"

    def __post_init__(self):
        if not self.member_ids:
            raise ValueError("ensemble needs at least one member")
        if len(set(self.member_ids)) != len(self.member_ids):
            raise ValueError("duplicate member ids")
        if self.held_out_id in self.member_ids:
            raise ValueError("held-out model cannot also be a member")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"unknown aggregation {self.aggregation!r}")


def _prediction_from_probs(probs: np.ndarray) -> Prediction:
    probs = np.asarray(probs, dtype=np.float64)
    total = probs.sum()
    if not np.isfinite(total) or abs(total - 1.0) > 1e-5 or probs.min() < 0:
        raise ValueError("adapter returned an unnormalized probability row")
    top = int(probs.argmax())
    return Prediction(probs=probs, top_class=top, top_confidence=float(probs[top]))


class ModelPool:
    """Named classifier handles plus batched convenience calls."""

    def __init__(self, handles: list[ClassifierHandle], class_names: list[str] | None = None):
        if class_names is not None:
            for h in handles:
                if h.label_count != len(class_names):
                    raise ValueError(f"{h.id}: label_count {h.label_count} != "
                                     f"{len(class_names)} class names")
        counts = {h.label_count for h in handles}
        if len(counts) > 1:
            raise ValueError(f"handles disagree on label space: {counts}")
        self._handles = {h.id: h for h in handles}
        self.class_names = class_names

    @property
    def ids(self) -> list[str]:
        return list(self._handles)

    @property
    def label_count(self) -> int:
        return next(iter(self._handles.values())).label_count

    def handle(self, model_id: str) -> ClassifierHandle:
        try:
            return self._handles[model_id]
        except KeyError:
            raise KeyError(f"unknown classifier id {model_id!r}") from None

    def class_index(self, name: str) -> int:
        if self.class_names is None:
            raise ValueError("pool has no label-space file")
        return self.class_names.index(name)

    # -- single-image contract ------------------------------------------------

    def predict(self, model_id: str, img: np.ndarray) -> Prediction:
        img = validate_image(img)
        probs = self.handle(model_id).adapter.predict_batch(img[None])[0]
        return _prediction_from_probs(probs)

    def input_gradient(self, model_id: str, img: np.ndarray, target: int) -> np.ndarray:
        img = validate_image(img)
        h = self.handle(model_id)
        if not h.differentiable:
            raise CapabilityError(f"{model_id} does not expose input gradients")
        g = h.adapter.input_gradient_batch(img, int(target))
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"{model_id}: non-finite gradient")
        return g

    # -- batched helpers used by generators -----------------------------------

    def predict_probs_batch(self, model_id: str, imgs: np.ndarray) -> np.ndarray:
        return self.handle(model_id).adapter.predict_batch(np.asarray(imgs, dtype=np.float64))

    def input_gradient_batch(self, model_id: str, imgs: np.ndarray, target: int) -> np.ndarray:
        h = self.handle(model_id)
        if not h.differentiable:
            raise CapabilityError(f"{model_id} does not expose input gradients")
        return h.adapter.input_gradient_batch(np.asarray(imgs, dtype=np.float64), int(target))

    def member_confidences(self, spec: EnsembleSpec, img: np.ndarray, target: int) -> dict[str, float]:
        return {mid: float(self.predict(mid, img).probs[int(target)])
                for mid in spec.member_ids}


def aggregate(values, aggregation: str) -> float:
    vals = list(values)
    if aggregation == "mean-confidence":
        return float(np.mean(vals))
    if aggregation == "min-confidence":
        return float(np.min(vals))
    raise ValueError(f"unknown aggregation {aggregation!r}")


def ensemble_confidence(pool: ModelPool, spec: EnsembleSpec, img: np.ndarray, target: int) -> float:
    per_member = pool.member_confidences(spec, img, target)
    return aggregate(per_member.values(), spec.aggregation)


def holdout_splits(pool_ids: list[str], aggregation: str = "mean-confidence"
                   ) -> list[tuple[EnsembleSpec, str]]:
    """One split per pool member: that member held out, all others in."""
    ids = list(pool_ids)
    if len(ids) < 2:
        raise ValueError("hold-one-out needs a pool of at least 2 models")
    splits = []
    for held in ids:
        members = tuple(i for i in ids if i != held)
        splits.append((EnsembleSpec(members, held_out_id=held, aggregation=aggregation), held))
    return splits


# -- registry loading ---------------------------------------------------------

_ADAPTER_BUILDERS = {}


def register_adapter(name: str):
    def deco(fn):
        _ADAPTER_BUILDERS[name] = fn
        return fn
    return deco


def _torch_builder(arch: str):
    def build(entry: dict, base: Path) -> Adapter:
        num_classes = int(entry.get("label_count", 10))
        net = nets.build(arch, num_classes=num_classes)
        weights = entry.get("weights")
        if weights:
            nets.load_weights(net, base / weights)
        pre = entry.get("preprocessing", {})
        return TorchAdapter(
            net,
            input_size=tuple(entry.get("input_size", (32, 32))),
            mean=pre.get("mean", (0.5, 0.5, 0.5)),
            scale=pre.get("scale", (0.5, 0.5, 0.5)),
            label_count=num_classes,
        )
    return build


for _arch in nets.ARCHITECTURES:
    _ADAPTER_BUILDERS[_arch] = _torch_builder(_arch)


@register_adapter("stub-constant")
def _build_constant(entry: dict, base: Path) -> Adapter:
    return ConstantAdapter(entry["probs"], input_size=tuple(entry.get("input_size", (32, 32))))


@register_adapter("torchvision")
def _build_torchvision(entry: dict, base: Path) -> Adapter:
    # Optional full-scale adapter; requires torchvision weights on disk or
    # a warm download cache. Not exercised by the desk-scale suite.
    import torchvision.models as tvm

    name = entry["arch"]
    weights = entry.get("weights", "DEFAULT")
    net = getattr(tvm, name)(weights=weights)
    pre = entry.get("preprocessing", {})
    return TorchAdapter(
        net,
        input_size=tuple(entry.get("input_size", (224, 224))),
        mean=pre.get("mean", (0.485, 0.456, 0.406)),
        scale=pre.get("scale", (0.229, 0.224, 0.225)),
        label_count=int(entry.get("label_count", 1000)),
    )


def load_pool(registry_path: str | Path) -> ModelPool:
    registry_path = Path(registry_path)
    cfg = json.loads(registry_path.read_text())
    base = registry_path.parent
    class_names = None
    if cfg.get("label_file"):
        class_names = (base / cfg["label_file"]).read_text().splitlines()
        class_names = [c for c in class_names if c.strip()]
    handles = []
    for entry in cfg["models"]:
        builder = _ADAPTER_BUILDERS.get(entry["adapter"])
        if builder is None:
            raise ValueError(f"unknown adapter {entry['adapter']!r}")
        adapter = builder(entry, base)
        handles.append(ClassifierHandle(
            id=entry["id"],
            input_size=tuple(entry.get("input_size", adapter.input_size)),
            label_count=int(entry.get("label_count", adapter.label_count)),
            preprocessing=entry.get("preprocessing", {}),
            adapter=adapter,
        ))
    return ModelPool(handles, class_names=class_names)
