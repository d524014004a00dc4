"""Command-line entry point.

Configuration precedence: built-in defaults < JSON config file (--config)
< CAPTURE_* environment variables < explicit flags. Every artifact manifest
records the seed that produced it.

Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import botsim
from .challenge import assemble as assemble_challenge
from .challenge import default_spec, save_challenge
from .imaging import save_image
from .models.fixtures import desk_pool
from .models.gateway import EnsembleSpec, load_pool
from .patching import TransformDistribution, eval_patch_scale_curve, train_patch
from .store import AssetStore
from .unrec import EvolutionConfig, evolve_cppn, evolve_direct, gradient_ascent_image

DEFAULTS = {
    "fixtures": "fixtures",
    "store": "runs/store",
    "out": "runs/out",
    "seed": 0,
    "ttl_seconds": 120.0,
    "host": "127.0.0.1",
    "port": 8000,
}

_ENV_PREFIX = "CAPTURE_"


def _load_config(path: str | None) -> dict:
    cfg = dict(DEFAULTS)
    if path:
        try:
            cfg.update(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as e:
            raise click.UsageError(f"bad config file {path}: {e}")
    for key in DEFAULTS:
        env = os.environ.get(_ENV_PREFIX + key.upper())
        if env is not None:
            cfg[key] = type(DEFAULTS[key])(env)
    return cfg


def _pool(cfg):
    registry = Path(cfg["fixtures"]) / "registry.json"
    if not registry.exists():
        raise click.ClickException(f"no model registry at {registry}; "
                                   "run `python -m capture.models.fixtures` first")
    return load_pool(registry)


def _fail(msg: str) -> None:
    print(json.dumps({"error": msg}), file=sys.stderr)
    sys.exit(1)


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON config file; CAPTURE_* env vars override it.")
@click.pass_context
def main(ctx, config_path):
    """Adversarial image-selection CAPTCHA toolkit."""
    ctx.obj = _load_config(config_path)


@main.command("gen-unrec")
@click.option("--method", type=click.Choice(["direct", "cppn", "gradient"]),
              required=True)
@click.option("--target", type=int, required=True, help="target class index")
@click.option("--seed", type=int, default=None)
@click.option("--size", type=int, default=64, help="square image side in px")
@click.option("--budget", type=int, default=500,
              help="generations (EAs) or steps (gradient)")
@click.option("--fitness-target", type=float, default=0.99)
@click.pass_obj
def gen_unrec(cfg, method, target, seed, size, budget, fitness_target):
    """Generate one unrecognizable image into the asset store."""
    seed = cfg["seed"] if seed is None else seed
    pool = _pool(cfg)
    ens = EnsembleSpec(tuple(pool.ids), held_out_id=None)
    extra = {}
    if method == "gradient":
        img = gradient_ascent_image(pool, target, ens, steps=budget, seed=seed,
                                    size=(size, size),
                                    stop_confidence=fitness_target)
    else:
        ec = EvolutionConfig(max_generations=budget, fitness_target=fitness_target,
                             target_class=target, ensemble=ens, seed=seed,
                             image_size=(size, size))
        if method == "cppn":
            genome, img, hist = evolve_cppn(pool, ec)
            extra["genome"] = json.loads(genome.to_json())
        else:
            img, hist = evolve_direct(pool, ec)
        extra["generations"] = len(hist)
        extra["final_fitness"] = hist[-1].aggregate
    store = AssetStore(cfg["store"])
    asset_id = f"unrec-{method}-{target}-{seed}"
    rec = store.add(asset_id, img, provenance=f"unrec-{method}",
                    fooling_class=target,
                    manifest={"seed": seed, "method": method, "budget": budget,
                              "size": size, **extra})
    print(store.image_path(rec.asset_id))


@main.command("gen-patch")
@click.option("--target", type=int, required=True)
@click.option("--seed", type=int, default=None)
@click.option("--steps", type=int, default=1500)
@click.option("--held-out", default=None, help="model id excluded from training")
@click.pass_obj
def gen_patch(cfg, target, seed, steps, held_out):
    """Train an adversarial patch and save patch.npz plus a manifest."""
    seed = cfg["seed"] if seed is None else seed
    pool = _pool(cfg)
    members = tuple(m for m in pool.ids if m != held_out)
    if held_out is not None and held_out not in pool.ids:
        raise click.UsageError(f"unknown model {held_out!r}")
    ens = EnsembleSpec(members, held_out_id=held_out)
    data = np.load(Path(cfg["fixtures"]) / "exemplars.npz")
    asset = train_patch(pool, target, ens, data["images"],
                        dist=TransformDistribution(scale_range=(0.45, 1.0)),
                        steps=steps, batch=12, seed=seed)
    out = Path(cfg["out"]) / f"patch-{target}-{seed}"
    out.mkdir(parents=True, exist_ok=True)
    np.savez(out / "patch.npz", patch=asset.patch, mask=asset.mask)
    save_image(asset.patch, out / "patch.png")
    (out / "manifest.json").write_text(json.dumps({
        "seed": seed, "target_class": target, "steps": steps,
        "trained_against": list(members), "held_out": held_out,
        "final_objective": asset.training_curve[-1]}, indent=2))
    print(out)


@main.command("assemble")
@click.option("--scheme", type=click.Choice(["clean", "unrec-only",
                                             "patch-only", "combined"]),
              required=True)
@click.option("--target", type=int, required=True)
@click.option("--seed", type=int, default=None)
@click.pass_obj
def assemble_cmd(cfg, scheme, target, seed):
    """Assemble one challenge from the asset store and save it as JSON."""
    seed = cfg["seed"] if seed is None else seed
    pool = _pool(cfg)
    store = AssetStore(cfg["store"])
    spec = default_spec(scheme, target, seed=seed)
    try:
        ch = assemble_challenge(spec, store, class_names=pool.class_names)
    except Exception as e:
        _fail(str(e))
    out = Path(cfg["out"]) / f"{ch.challenge_id}.json"
    save_challenge(ch, out)
    print(out)


@main.command("eval-transfer")
@click.option("--method", type=click.Choice(["direct", "cppn", "gradient"]),
              default="cppn")
@click.option("--n-per-split", type=int, default=5)
@click.option("--seed", type=int, default=None)
@click.pass_obj
def eval_transfer(cfg, method, n_per_split, seed):
    """Hold-one-out transferability of unrecognizable images."""
    seed = cfg["seed"] if seed is None else seed
    pool = _pool(cfg)
    report = botsim.run_transfer_eval(pool, n_per_split, method=method, seed=seed)
    out = Path(cfg["out"])
    report.write_json(out / "transfer.json")
    report.write_csv(out / "transfer.csv")
    print(out / "transfer.json")


@main.command("eval-patch-curve")
@click.option("--scales", default="0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")
@click.option("--train-steps", type=int, default=1500)
@click.option("--seed", type=int, default=None)
@click.pass_obj
def eval_patch_curve(cfg, scales, train_steps, seed):
    """Patch success vs scale, white-box and held-out, as CSV + JSON."""
    seed = cfg["seed"] if seed is None else seed
    pool = _pool(cfg)
    data = np.load(Path(cfg["fixtures"]) / "exemplars.npz")
    scale_list = [float(s) for s in scales.split(",")]
    report = botsim.run_patch_curve_eval(pool, data["images"], scale_list,
                                         train_steps=train_steps, seed=seed)
    out = Path(cfg["out"])
    report.write_json(out / "patch-curve.json")
    report.write_csv(out / "patch-curve.csv")
    print(out / "patch-curve.csv")


@main.command("eval-solve")
@click.option("--schemes", default="clean,unrec-only,patch-only,combined")
@click.option("--n-challenges", type=int, default=20)
@click.option("--target", type=int, default=0)
@click.option("--solver-models", default=None,
              help="comma-separated model ids; default: all in the pool")
@click.option("--seed", type=int, default=None)
@click.pass_obj
def eval_solve(cfg, schemes, n_challenges, target, solver_models, seed):
    """Bot solve rates per scheme over freshly assembled challenges."""
    seed = cfg["seed"] if seed is None else seed
    pool = _pool(cfg)
    store = AssetStore(cfg["store"])
    solvers = tuple(solver_models.split(",")) if solver_models else tuple(pool.ids)
    bot = botsim.BotConfig(solver_models=solvers)
    try:
        report = botsim.run_challenge_solve_eval(
            pool, bot, schemes.split(","), n_challenges, store, target, seed=seed)
    except Exception as e:
        _fail(str(e))
    out = Path(cfg["out"])
    report.write_json(out / "solve.json")
    report.write_csv(out / "solve.csv")
    print(out / "solve.json")


@main.command("plot-curve")
@click.argument("csv_path", type=click.Path(exists=True))
@click.pass_obj
def plot_curve(cfg, csv_path):
    """Render a patch-curve CSV as one PNG per held-out model."""
    from .plotting import plot_scale_curves
    for p in plot_scale_curves(csv_path, Path(cfg["out"]) / "figures"):
        print(p)


@main.command("serve")
@click.option("--static-dir", type=click.Path(), default=None,
              help="built frontend to serve at /")
@click.pass_obj
def serve(cfg, static_dir):
    """Run the challenge-serving HTTP API."""
    import uvicorn

    from .service import ChallengeService, create_app
    pool = _pool(cfg)
    store = AssetStore(cfg["store"])
    svc = ChallengeService(store, pool.class_names,
                           log_path=Path(cfg["out"]) / "sessions.jsonl",
                           ttl_seconds=cfg["ttl_seconds"])
    uvicorn.run(create_app(svc, static_dir=static_dir),
                host=cfg["host"], port=int(cfg["port"]))


if __name__ == "__main__":
    main()
