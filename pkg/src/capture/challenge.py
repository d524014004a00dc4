"""Challenge assembly, verification, and prompt rendering.

A challenge is a row-major grid of asset references with a prompt and an
answer key. The key is exactly the set of cells whose asset shows the
target class to a human (clean target images, or target-class hosts
carrying an off-target patch); everything is derivable from asset
provenance, no model in the loop.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .store import AssetRecord, AssetStore, ShortageError

SCHEMES = ("clean", "unrec-only", "patch-only", "combined")


@dataclass(frozen=True)
class ChallengeSpec:
    target_class: int
    scheme: str = "combined"
    grid: tuple[int, int] = (3, 3)
    n_true: int = 1              # cells a human should select
    n_patched_true: int = 0      # of the true cells, how many carry a patch
    n_unrecognizable: int = 0
    n_patched_decoy: int = 0
    n_clean_decoy: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not 1 <= self.n_true <= 3:
            raise ValueError("n_true must be 1..3")
        if not 0 <= self.n_patched_true <= self.n_true:
            raise ValueError("n_patched_true must not exceed n_true")
        cells = self.grid[0] * self.grid[1]
        total = self.n_true + self.n_unrecognizable + self.n_patched_decoy + self.n_clean_decoy
        if total != cells:
            raise ValueError(f"cell counts sum to {total}, grid has {cells}")


def default_spec(scheme: str, target_class: int, seed: int = 0) -> ChallengeSpec:
    """The grid compositions used throughout the experiments (3x3, one true cell)."""
    common = dict(target_class=target_class, scheme=scheme, seed=seed, n_true=1)
    if scheme == "clean":
        return ChallengeSpec(n_clean_decoy=8, **common)
    if scheme == "unrec-only":
        return ChallengeSpec(n_unrecognizable=2, n_clean_decoy=6, **common)
    if scheme == "patch-only":
        return ChallengeSpec(n_patched_true=1, n_patched_decoy=8, **common)
    if scheme == "combined":
        return ChallengeSpec(n_patched_true=1, n_unrecognizable=2,
                             n_patched_decoy=6, **common)
    raise ValueError(f"unknown scheme {scheme!r}")


@dataclass(frozen=True)
class Challenge:
    challenge_id: str
    prompt: str
    cells: tuple[str, ...]        # asset ids, row-major
    answer_key: frozenset[int]
    spec: ChallengeSpec
    created_at: float             # unix seconds

    def to_json(self) -> str:
        return json.dumps({
            "challenge_id": self.challenge_id,
            "prompt": self.prompt,
            "cells": list(self.cells),
            "answer_key": sorted(self.answer_key),
            "spec": asdict(self.spec),
            "created_at": self.created_at,
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Challenge":
        d = json.loads(text)
        spec = d["spec"]
        spec["grid"] = tuple(spec["grid"])
        return cls(
            challenge_id=d["challenge_id"],
            prompt=d["prompt"],
            cells=tuple(d["cells"]),
            answer_key=frozenset(d["answer_key"]),
            spec=ChallengeSpec(**spec),
            created_at=float(d["created_at"]),
        )


class MalformedSelectionError(ValueError):
    pass


def render_prompt(class_name: str, scheme: str) -> str:
    """Grid prompt text; schemes containing unrecognizable cells stress that
    the answer is a *real* image."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    name = class_name.upper()
    if scheme in ("unrec-only", "combined", "clean"):
        return f"Select all the choices that show a real image of {name}"
    return f"Select all the choices that show an image of a {name}"


def _take(pool_records: list[AssetRecord], n: int, used: set[str],
          shortfall: list, provenance: str, cls: int | None) -> list[AssetRecord]:
    picked = []
    for rec in pool_records:
        if len(picked) == n:
            break
        if rec.asset_id not in used:
            picked.append(rec)
            used.add(rec.asset_id)
    if len(picked) < n:
        shortfall.append((provenance, cls, n - len(picked)))
    return picked


def assemble(spec: ChallengeSpec, store: AssetStore,
             class_names: list[str] | None = None,
             created_at: float = 0.0) -> Challenge:
    """Deterministic under (spec, store snapshot): asset choice and cell
    shuffle are driven by spec.seed alone."""
    rng = np.random.default_rng(spec.seed)
    tgt = spec.target_class
    used: set[str] = set()
    shortfall: list = []

    def shuffled(records):
        records = list(records)
        rng.shuffle(records)
        return records

    true_cells: list[AssetRecord] = []
    n_clean_true = spec.n_true - spec.n_patched_true
    true_cells += _take(shuffled(store.query("clean", true_class=tgt)),
                        n_clean_true, used, shortfall, "clean", tgt)
    true_cells += _take(shuffled(store.query("patched", true_class=tgt)),
                        spec.n_patched_true, used, shortfall, "patched", tgt)

    decoys: list[AssetRecord] = []
    unrec = [r for r in store.records()
             if r.provenance in ("unrec-cppn", "unrec-gradient", "unrec-direct")
             and r.fooling_class == tgt]
    decoys += _take(shuffled(unrec), spec.n_unrecognizable, used, shortfall,
                    "unrec-*", tgt)
    patched_decoys = [r for r in store.query("patched", fooling_class=tgt)
                      if r.true_class != tgt]
    decoys += _take(shuffled(patched_decoys), spec.n_patched_decoy, used,
                    shortfall, "patched", tgt)
    clean_decoys = store.query("clean", exclude_true_class=tgt) \
        + store.query("perturbed-clean", exclude_true_class=tgt)
    decoys += _take(shuffled(clean_decoys), spec.n_clean_decoy, used, shortfall,
                    "clean", None)

    if shortfall:
        raise ShortageError(shortfall)

    cells = true_cells + decoys
    order = rng.permutation(len(cells))
    cells = [cells[i] for i in order]
    answer_key = frozenset(i for i, rec in enumerate(cells) if rec.true_class == tgt)

    name = class_names[tgt] if class_names else f"class {tgt}"
    challenge_id = f"ch-{spec.scheme}-{tgt}-{spec.seed}"
    return Challenge(
        challenge_id=challenge_id,
        prompt=render_prompt(name, spec.scheme),
        cells=tuple(r.asset_id for r in cells),
        answer_key=answer_key,
        spec=spec,
        created_at=created_at,
    )


def verify(challenge: Challenge, selection) -> bool:
    """Pass iff the selection equals the answer key exactly (no partial credit)."""
    n_cells = challenge.spec.grid[0] * challenge.spec.grid[1]
    sel = set(int(i) for i in selection)
    for i in sel:
        if not 0 <= i < n_cells:
            raise MalformedSelectionError(f"cell index {i} outside 0..{n_cells - 1}")
    return sel == set(challenge.answer_key)


def save_challenge(challenge: Challenge, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(challenge.to_json())


def load_challenge(path: str | Path) -> Challenge:
    return Challenge.from_json(Path(path).read_text())
