"""Direct-encoding evolution of unrecognizable images.

The genome is the raw pixel grid in [0, 255]. Pixels are selected for
mutation with a probability that starts at 10% and halves every 1000
generations, and selected pixels move by Deb's polynomial mutation with
distribution index 15. Selection is elitist hill-climbing over a small
population scored by ensemble confidence in the target class.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..models.gateway import EnsembleSpec, ModelPool, aggregate


@dataclass
class DirectGenome:
    """Raw pixel genome, values in [0, 255] (kept as float64 so the
    polynomial mutation operator is exact; images quantize on save)."""

    pixels: np.ndarray
    rng_seed: int

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.min() < 0 or self.pixels.max() > 255:
            raise ValueError("genome values outside [0, 255]")

    def to_image(self) -> np.ndarray:
        return self.pixels / 255.0


@dataclass(frozen=True)
class EvolutionConfig:
    population_size: int = 20
    max_generations: int = 2000
    mutation_strength: float = 15.0      # polynomial-mutation eta
    initial_mutation_rate: float = 0.10
    rate_halving_period: int = 1000      # generations
    fitness_target: float = 0.99
    target_class: int = 0
    ensemble: EnsembleSpec | None = None
    seed: int = 0
    image_size: tuple[int, int] = (224, 224)

    def __post_init__(self):
        if not (0 <= self.initial_mutation_rate <= 1):
            raise ValueError("initial_mutation_rate outside [0, 1]")
        if self.initial_mutation_rate == 0 and self.fitness_target > 0:
            pass  # legal, just won't make progress
        if self.mutation_strength <= 0:
            raise ValueError("mutation_strength must be > 0")
        if self.rate_halving_period < 1:
            raise ValueError("rate_halving_period must be >= 1")


@dataclass(frozen=True)
class FitnessRecord:
    generation: int
    per_member_confidence: dict[str, float]
    aggregate: float


def mutation_rate_at(gen: int, cfg: EvolutionConfig) -> float:
    """rate(g) = r0 * 2^(-floor(g / period)); exact, no float drift on the exponent."""
    if gen < 0:
        raise ValueError("generation must be >= 0")
    return cfg.initial_mutation_rate * 2.0 ** (-(gen // cfg.rate_halving_period))


def polynomial_mutate(g: DirectGenome, rate: float, eta: float, seed: int,
                      lo: float = 0.0, hi: float = 255.0) -> DirectGenome:
    """Deb's bounded polynomial mutation, applied per-pixel with prob `rate`."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError("rate outside [0, 1]")
    rng = np.random.default_rng(seed)
    x = g.pixels.copy()
    pick = rng.random(x.shape) < rate
    if pick.any():
        u = rng.random(x.shape)[pick]
        xv = x[pick]
        span = hi - lo
        d1 = (xv - lo) / span
        d2 = (hi - xv) / span
        mpow = 1.0 / (eta + 1.0)
        low = u < 0.5
        dq = np.empty_like(u)
        dq[low] = (2.0 * u[low] + (1.0 - 2.0 * u[low])
                   * (1.0 - d1[low]) ** (eta + 1.0)) ** mpow - 1.0
        dq[~low] = 1.0 - (2.0 * (1.0 - u[~low]) + 2.0 * (u[~low] - 0.5)
                          * (1.0 - d2[~low]) ** (eta + 1.0)) ** mpow
        x[pick] = np.clip(xv + dq * span, lo, hi)
    return DirectGenome(pixels=x, rng_seed=seed)


def _score_population(pool: ModelPool, spec: EnsembleSpec, images: np.ndarray,
                      target: int) -> tuple[np.ndarray, list[dict[str, float]]]:
    """Aggregate fitness per image plus per-member confidence rows."""
    per_member = {mid: pool.predict_probs_batch(mid, images)[:, target]
                  for mid in spec.member_ids}
    rows = [{mid: float(per_member[mid][i]) for mid in spec.member_ids}
            for i in range(len(images))]
    fits = np.array([aggregate(row.values(), spec.aggregation) for row in rows])
    return fits, rows


def evolve_direct(pool: ModelPool, cfg: EvolutionConfig
                  ) -> tuple[np.ndarray, list[FitnessRecord]]:
    """Best-of-run image plus per-generation fitness history (elitist, so
    the history is monotone non-decreasing)."""
    if cfg.ensemble is None:
        raise ValueError("config needs an ensemble")
    rng = np.random.default_rng(cfg.seed)
    h, w = cfg.image_size
    shape = (h, w, 3)
    target = cfg.target_class

    population = [DirectGenome(rng.uniform(0.0, 255.0, size=shape),
                               rng_seed=int(rng.integers(2 ** 63)))
                  for _ in range(cfg.population_size)]
    imgs = np.stack([g.to_image() for g in population])
    fits, rows = _score_population(pool, cfg.ensemble, imgs, target)
    i_best = int(fits.argmax())
    best, best_fit, best_row = population[i_best], float(fits[i_best]), rows[i_best]
    history = [FitnessRecord(0, best_row, best_fit)]

    for gen in range(1, cfg.max_generations + 1):
        if best_fit >= cfg.fitness_target:
            break
        rate = mutation_rate_at(gen, cfg)
        children = [best]  # keep-best-1 elitism
        while len(children) < cfg.population_size:
            contenders = rng.integers(len(population), size=3)
            parent = population[int(max(contenders, key=lambda j: fits[j]))]
            children.append(polynomial_mutate(parent, rate, cfg.mutation_strength,
                                              seed=int(rng.integers(2 ** 63))))
        population = children
        imgs = np.stack([g.to_image() for g in population])
        fits, rows = _score_population(pool, cfg.ensemble, imgs, target)
        i = int(fits.argmax())
        if fits[i] > best_fit:
            best, best_fit, best_row = population[i], float(fits[i]), rows[i]
        history.append(FitnessRecord(gen, best_row, best_fit))

    return best.to_image(), history
