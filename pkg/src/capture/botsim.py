"""The threat-model bot and the security-evaluation harness.

The bot knows the prompt's target class, runs its classifiers on every grid
cell, and selects the cells it believes match. Experiments measure how
often adversarial assets transfer to a held-out model and how far the
hardened schemes push the bot's solve rate below its clean baseline.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .challenge import Challenge, ChallengeSpec, assemble, default_spec, verify
from .models.gateway import EnsembleSpec, ModelPool, holdout_splits
from .patching import TransformDistribution, eval_patch_scale_curve, train_patch
from .store import AssetStore
from .unrec import EvolutionConfig, evolve_cppn, evolve_direct, gradient_ascent_image

DECISION_RULES = ("top1-match", "threshold-match")

# joint fooling criterion: held-out top-1 equals the target AND the
# confidence clears this bar
FOOLING_CONFIDENCE = 0.95


@dataclass(frozen=True)
class BotConfig:
    solver_models: tuple[str, ...]
    decision_rule: str = "top1-match"
    threshold: float | None = None
    knows_prompt: bool = True  # always true under the threat model

    def __post_init__(self):
        if not self.solver_models:
            raise ValueError("bot needs at least one solver model")
        if self.decision_rule not in DECISION_RULES:
            raise ValueError(f"unknown decision rule {self.decision_rule!r}")
        if self.decision_rule == "threshold-match":
            if self.threshold is None or not 0.0 < self.threshold < 1.0:
                if self.threshold != 1.0:  # tests exercise the unreachable bar
                    raise ValueError("threshold-match needs threshold in (0, 1)")


@dataclass
class EvalReport:
    experiment: str                      # transfer-unrec | patch-curve | challenge-solve
    per_item: list[dict]
    aggregates: dict
    config: dict
    seed: int

    def write_json(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(asdict(self), indent=2))

    def write_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        if not self.per_item:
            path.write_text("")
            return
        fields = list(self.per_item[0])
        with path.open("w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=fields)
            w.writeheader()
            w.writerows(self.per_item)


# -- challenge solving ----------------------------------------------------------


def solve_challenge(pool: ModelPool, bot: BotConfig, challenge: Challenge,
                    store: AssetStore) -> set[int]:
    """Cells the bot clicks. Per model: a cell matches if its top class is
    the target (or clears the threshold); models vote by strict majority."""
    target = challenge.spec.target_class
    votes = np.zeros(len(challenge.cells), dtype=int)
    imgs = [store.image(a) for a in challenge.cells]
    for mid in bot.solver_models:
        for i, img in enumerate(imgs):
            pred = pool.predict(mid, img)
            if bot.decision_rule == "top1-match":
                hit = pred.top_class == target
            else:
                hit = pred.probs[target] >= bot.threshold
            votes[i] += int(hit)
    need = len(bot.solver_models) // 2 + 1
    return {i for i in range(len(votes)) if votes[i] >= need}


# -- transferability of unrecognizable images -----------------------------------


def _generate_unrec(pool: ModelPool, method: str, target: int,
                    ensemble: EnsembleSpec, seed: int,
                    size: tuple[int, int], budget: int) -> np.ndarray:
    if method == "gradient":
        return gradient_ascent_image(pool, target, ensemble, steps=budget,
                                     seed=seed, size=size, stop_confidence=0.99)
    cfg = EvolutionConfig(max_generations=budget, fitness_target=0.99,
                          target_class=target, ensemble=ensemble, seed=seed,
                          image_size=size)
    if method == "cppn":
        _, img, _ = evolve_cppn(pool, cfg)
        return img
    if method == "direct":
        img, _ = evolve_direct(pool, cfg)
        return img
    raise ValueError(f"unknown method {method!r}")


def run_transfer_eval(pool: ModelPool, n_per_split: int, method: str = "cppn",
                      seed: int = 0, size: tuple[int, int] = (64, 64),
                      budget: int = 300,
                      fooling_confidence: float = FOOLING_CONFIDENCE) -> EvalReport:
    """Hold-one-out transferability: generate against each (k-1)-member
    ensemble and measure the held-out model's target-class rate/confidence."""
    rows = []
    rng = np.random.default_rng(seed)
    for spec, held in holdout_splits(pool.ids):
        for j in range(n_per_split):
            target = int(rng.integers(pool.label_count))
            img = _generate_unrec(pool, method, target, spec,
                                  seed=int(rng.integers(2 ** 31)),
                                  size=size, budget=budget)
            member_conf = {m: float(pool.predict(m, img).probs[target])
                           for m in spec.member_ids}
            member_fooled = {
                m: pool.predict(m, img).top_class == target
                and member_conf[m] >= fooling_confidence
                for m in spec.member_ids}
            held_pred = pool.predict(held, img)
            rows.append({
                "held_out": held,
                "item": j,
                "target": target,
                "whitebox_fooling_rate": float(np.mean(list(member_fooled.values()))),
                "whitebox_mean_confidence": float(np.mean(list(member_conf.values()))),
                "heldout_fooled": int(held_pred.top_class == target
                                      and held_pred.top_confidence >= fooling_confidence),
                "heldout_confidence": float(held_pred.probs[target]),
            })

    per_split = {}
    for spec, held in holdout_splits(pool.ids):
        split_rows = [r for r in rows if r["held_out"] == held]
        per_split[held] = {
            "whitebox_fooling_rate": float(np.mean([r["whitebox_fooling_rate"] for r in split_rows])),
            "heldout_fooling_rate": float(np.mean([r["heldout_fooled"] for r in split_rows])),
            "heldout_mean_confidence": float(np.mean([r["heldout_confidence"] for r in split_rows])),
        }
    aggregates = {
        "per_split": per_split,
        "pooled_heldout_fooling_rate": float(np.mean([r["heldout_fooled"] for r in rows])),
        "pooled_whitebox_fooling_rate": float(np.mean([r["whitebox_fooling_rate"] for r in rows])),
    }
    return EvalReport(
        experiment="transfer-unrec",
        per_item=rows,
        aggregates=aggregates,
        config={"method": method, "n_per_split": n_per_split, "size": list(size),
                "budget": budget, "fooling_confidence": fooling_confidence},
        seed=seed,
    )


# -- patch scale curves ----------------------------------------------------------


def run_patch_curve_eval(pool: ModelPool, images: np.ndarray, scales,
                         train_steps: int = 1500, train_batch: int = 12,
                         seed: int = 0, target: int = 5,
                         dist: TransformDistribution | None = None,
                         n_eval_images: int | None = None) -> EvalReport:
    """Per hold-one-out split: train a patch on the members, sweep scales on
    both a member (white-box) and the held-out model."""
    dist = dist or TransformDistribution(scale_range=(0.45, 1.0))
    rows = []
    eval_imgs = images if n_eval_images is None else images[:n_eval_images]
    for spec, held in holdout_splits(pool.ids):
        asset = train_patch(pool, target, spec, images, dist=dist,
                            steps=train_steps, batch=train_batch, seed=seed)
        for mid, role in [(spec.member_ids[0], "whitebox"), (held, "heldout")]:
            curve = eval_patch_scale_curve(pool, asset, mid, eval_imgs, scales,
                                           seed=seed)
            for r in curve.rows:
                rows.append({"held_out": held, "model": mid, "role": role, **r})
    aggregates = {}
    for role in ("whitebox", "heldout"):
        role_rows = [r for r in rows if r["role"] == role]
        aggregates[role] = {
            str(s): float(np.mean([r["success_rate"] for r in role_rows
                                   if r["scale"] == s and r["trials"] > 0]))
            for s in scales}
    return EvalReport(
        experiment="patch-curve",
        per_item=rows,
        aggregates=aggregates,
        config={"scales": [float(s) for s in scales], "train_steps": train_steps,
                "target": target},
        seed=seed,
    )


# -- end-to-end challenge solving -------------------------------------------------


def run_challenge_solve_eval(pool: ModelPool, bot: BotConfig, schemes,
                             n_challenges: int, store: AssetStore,
                             target_class: int, seed: int = 0) -> EvalReport:
    """Assemble n challenges per scheme and report the bot's solve rates."""
    rows = []
    for scheme in schemes:
        for j in range(n_challenges):
            spec = default_spec(scheme, target_class, seed=seed + j)
            ch = assemble(spec, store, class_names=pool.class_names)
            selection = solve_challenge(pool, bot, ch, store)
            rows.append({
                "scheme": scheme,
                "challenge_id": ch.challenge_id,
                "solved": int(verify(ch, selection)),
                "n_selected": len(selection),
                "n_key": len(ch.answer_key),
            })
    aggregates = {"solve_rate": {}}
    for scheme in schemes:
        scheme_rows = [r for r in rows if r["scheme"] == scheme]
        aggregates["solve_rate"][scheme] = (
            float(np.mean([r["solved"] for r in scheme_rows])) if scheme_rows else None)
    return EvalReport(
        experiment="challenge-solve",
        per_item=rows,
        aggregates=aggregates,
        config={"bot": asdict(bot), "schemes": list(schemes),
                "n_challenges": n_challenges, "target_class": target_class},
        seed=seed,
    )
