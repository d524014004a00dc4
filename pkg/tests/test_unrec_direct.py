from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capture.models.gateway import EnsembleSpec
from capture.unrec.direct import (DirectGenome, EvolutionConfig,
                                  evolve_direct, mutation_rate_at,
                                  polynomial_mutate)


def scalar_polynomial_mutation(x, u, eta, lo=0.0, hi=255.0):
    """Independent scalar reference for Deb's bounded polynomial mutation,
    written directly from the textbook formula, no vectorization tricks."""
    span = hi - lo
    if u < 0.5:
        d = (x - lo) / span
        dq = (2.0 * u + (1.0 - 2.0 * u) * (1.0 - d) ** (eta + 1.0)) \
            ** (1.0 / (eta + 1.0)) - 1.0
    else:
        d = (hi - x) / span
        dq = 1.0 - (2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d) ** (eta + 1.0)) \
            ** (1.0 / (eta + 1.0))
    return min(max(x + dq * span, lo), hi)


def test_mutation_rate_schedule_exact():
    cfg = EvolutionConfig()
    assert mutation_rate_at(0, cfg) == 0.10
    assert mutation_rate_at(999, cfg) == 0.10
    assert mutation_rate_at(1000, cfg) == 0.05
    assert mutation_rate_at(1999, cfg) == 0.05
    assert mutation_rate_at(2000, cfg) == 0.025
    assert mutation_rate_at(5000, cfg) == 0.10 * 2.0 ** -5
    with pytest.raises(ValueError):
        mutation_rate_at(-1, cfg)


def test_polynomial_mutation_matches_scalar_oracle_over_10k_draws():
    # rate=1 so every site mutates; replay the module's RNG stream to get
    # the same (pick, u) draws, then check value-for-value against the
    # scalar formula.
    n = 10_000
    rng = np.random.default_rng(42)
    pixels = rng.uniform(0, 255, size=(n, 1, 1))
    g = DirectGenome(pixels=pixels, rng_seed=0)
    seed = 7
    out = polynomial_mutate(g, rate=1.0, eta=15.0, seed=seed)

    replay = np.random.default_rng(seed)
    pick = replay.random(pixels.shape) < 1.0
    assert pick.all()
    u = replay.random(pixels.shape)
    expected = np.array([
        scalar_polynomial_mutation(pixels.flat[i], u.flat[i], 15.0)
        for i in range(n)
    ]).reshape(pixels.shape)
    np.testing.assert_allclose(out.pixels, expected, rtol=0, atol=1e-12)


def test_polynomial_mutation_stays_in_bounds_and_respects_rate_zero():
    rng = np.random.default_rng(0)
    g = DirectGenome(pixels=rng.uniform(0, 255, size=(8, 8, 3)), rng_seed=0)
    out = polynomial_mutate(g, rate=0.0, eta=15.0, seed=1)
    np.testing.assert_array_equal(out.pixels, g.pixels)
    out = polynomial_mutate(g, rate=1.0, eta=15.0, seed=1)
    assert out.pixels.min() >= 0.0 and out.pixels.max() <= 255.0


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 255.0), st.floats(0.0, 1.0, exclude_max=True),
       st.floats(1.0, 100.0))
def test_scalar_mutation_bounded_property(x, u, eta):
    y = scalar_polynomial_mutation(x, u, eta)
    assert 0.0 <= y <= 255.0


def test_mutation_is_deterministic_per_seed():
    rng = np.random.default_rng(3)
    g = DirectGenome(pixels=rng.uniform(0, 255, size=(4, 4, 3)), rng_seed=0)
    a = polynomial_mutate(g, rate=0.5, eta=15.0, seed=9)
    b = polynomial_mutate(g, rate=0.5, eta=15.0, seed=9)
    c = polynomial_mutate(g, rate=0.5, eta=15.0, seed=10)
    np.testing.assert_array_equal(a.pixels, b.pixels)
    assert not np.array_equal(a.pixels, c.pixels)


def test_genome_rejects_out_of_range():
    with pytest.raises(ValueError):
        DirectGenome(pixels=np.full((2, 2, 3), 256.0), rng_seed=0)


def test_evolve_direct_history_monotone(desk_pool_fixture):
    pool = desk_pool_fixture
    cfg = EvolutionConfig(population_size=8, max_generations=15,
                          fitness_target=0.999, target_class=3,
                          ensemble=EnsembleSpec(tuple(pool.ids), held_out_id=None),
                          seed=5, image_size=(32, 32))
    img, hist = evolve_direct(pool, cfg)
    assert img.shape == (32, 32, 3)
    fits = [r.aggregate for r in hist]
    assert all(b >= a - 1e-12 for a, b in zip(fits, fits[1:]))
    assert set(hist[0].per_member_confidence) == set(pool.ids)


def test_evolve_direct_reproducible(desk_pool_fixture):
    pool = desk_pool_fixture
    cfg = EvolutionConfig(population_size=6, max_generations=5,
                          fitness_target=0.999, target_class=1,
                          ensemble=EnsembleSpec(tuple(pool.ids), held_out_id=None),
                          seed=11, image_size=(32, 32))
    img1, _ = evolve_direct(pool, cfg)
    img2, _ = evolve_direct(pool, cfg)
    np.testing.assert_array_equal(img1, img2)
