"""On-disk asset store: PNGs plus JSON manifests under one catalog index.

Layout:  <root>/catalog.json            (list of asset records)
         <root>/assets/<asset_id>.png   (the image)
         <root>/assets/<asset_id>.json  (generation manifest sidecar)

The catalog is rewritten by a single writer (generators); readers treat a
loaded store as an immutable snapshot.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .imaging import load_image, save_image

PROVENANCES = (
    "clean",
    "unrec-direct",
    "unrec-cppn",
    "unrec-gradient",
    "patched",
    "perturbed-clean",
)

_UNRECOGNIZABLE = {"unrec-direct", "unrec-cppn", "unrec-gradient"}


@dataclass(frozen=True)
class AssetRecord:
    asset_id: str
    path: str                    # PNG path relative to the store root
    provenance: str
    true_class: int | None       # what a human sees; None for unrecognizable
    fooling_class: int | None    # what the generation-time models see
    manifest: dict

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.provenance in _UNRECOGNIZABLE:
            if self.true_class is not None:
                raise ValueError("unrecognizable assets have no true_class")
            if self.fooling_class is None:
                raise ValueError("unrecognizable assets need a fooling_class")
        if self.provenance == "patched":
            if self.true_class is None or self.fooling_class is None:
                raise ValueError("patched assets carry both true_class and fooling_class")


class ShortageError(LookupError):
    """Store lacks assets of a required (provenance, class) combination."""

    def __init__(self, missing: list[tuple[str, int | None, int]]):
        self.missing = missing
        detail = "; ".join(f"need {n} more of provenance={p!r}, class={c}"
                           for p, c, n in missing)
        super().__init__(f"asset shortage: {detail}")


class AssetStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._records: dict[str, AssetRecord] = {}
        catalog = self.root / "catalog.json"
        if catalog.exists():
            for entry in json.loads(catalog.read_text()):
                rec = AssetRecord(**entry)
                self._records[rec.asset_id] = rec

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, asset_id: str) -> bool:
        return asset_id in self._records

    def record(self, asset_id: str) -> AssetRecord:
        try:
            return self._records[asset_id]
        except KeyError:
            raise KeyError(f"unknown asset {asset_id!r}") from None

    def records(self) -> list[AssetRecord]:
        return list(self._records.values())

    def image(self, asset_id: str) -> np.ndarray:
        return load_image(self.root / self.record(asset_id).path)

    def image_path(self, asset_id: str) -> Path:
        return self.root / self.record(asset_id).path

    def add(self, asset_id: str, image: np.ndarray, provenance: str,
            true_class: int | None = None, fooling_class: int | None = None,
            manifest: dict | None = None) -> AssetRecord:
        if asset_id in self._records:
            raise ValueError(f"duplicate asset id {asset_id!r}")
        rel = f"assets/{asset_id}.png"
        save_image(image, self.root / rel)
        rec = AssetRecord(asset_id=asset_id, path=rel, provenance=provenance,
                          true_class=true_class, fooling_class=fooling_class,
                          manifest=manifest or {})
        (self.root / f"assets/{asset_id}.json").write_text(
            json.dumps(asdict(rec), indent=2))
        self._records[asset_id] = rec
        self._write_catalog()
        return rec

    def _write_catalog(self) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "catalog.json").write_text(
            json.dumps([asdict(r) for r in self._records.values()], indent=2))

    def query(self, provenance: str | None = None, true_class: int | None = None,
              fooling_class: int | None = None,
              exclude_true_class: int | None = None) -> list[AssetRecord]:
        """Deterministic (insertion-ordered) filtered view of the catalog."""
        out = []
        for rec in self._records.values():
            if provenance is not None and rec.provenance != provenance:
                continue
            if true_class is not None and rec.true_class != true_class:
                continue
            if fooling_class is not None and rec.fooling_class != fooling_class:
                continue
            if exclude_true_class is not None and rec.true_class == exclude_true_class:
                continue
            out.append(rec)
        return out
