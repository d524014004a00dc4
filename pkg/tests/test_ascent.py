"""Gradient ascent and clean-image perturbation."""

import numpy as np
import pytest

from capture.models.gateway import EnsembleSpec
from capture.unrec import gradient_ascent_image, perturb_clean


def test_ascent_raises_target_confidence(desk_pool_fixture):
    pool = desk_pool_fixture
    spec = EnsembleSpec(member_ids=("conv-a",))
    img = gradient_ascent_image(pool, target=3, ensemble=spec, steps=150, seed=0)
    assert pool.predict("conv-a", img).probs[3] > 0.9


def test_ascent_respects_range_and_size(desk_pool_fixture):
    spec = EnsembleSpec(member_ids=("conv-a", "conv-b"))
    img = gradient_ascent_image(desk_pool_fixture, target=1, ensemble=spec,
                                steps=20, seed=2, size=(48, 48))
    assert img.shape == (48, 48, 3)
    assert img.min() >= 0.0 and img.max() <= 1.0


def test_ascent_stop_confidence_short_circuits(desk_pool_fixture):
    spec = EnsembleSpec(member_ids=("conv-a",))
    img = gradient_ascent_image(desk_pool_fixture, target=3, ensemble=spec,
                                steps=10_000, seed=0, stop_confidence=0.9)
    conf = desk_pool_fixture.predict("conv-a", img).probs[3]
    assert conf >= 0.9


def test_ascent_deterministic(desk_pool_fixture):
    spec = EnsembleSpec(member_ids=("conv-a",))
    a = gradient_ascent_image(desk_pool_fixture, 2, spec, steps=15, seed=7)
    b = gradient_ascent_image(desk_pool_fixture, 2, spec, steps=15, seed=7)
    np.testing.assert_array_equal(a, b)


def test_perturb_clean_sup_norm_bound(desk_pool_fixture, exemplars):
    imgs, _ = exemplars
    spec = EnsembleSpec(member_ids=("conv-a", "conv-b", "conv-c"))
    eps = 8.0 / 255.0
    out = perturb_clean(desk_pool_fixture, imgs[0], spec, epsilon=eps)
    assert np.max(np.abs(out - imgs[0])) <= eps + 1e-12
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_perturb_clean_rejects_bad_epsilon(desk_pool_fixture, exemplars):
    imgs, _ = exemplars
    spec = EnsembleSpec(member_ids=("conv-a",))
    with pytest.raises(ValueError):
        perturb_clean(desk_pool_fixture, imgs[0], spec, epsilon=0.0)
    with pytest.raises(ValueError):
        perturb_clean(desk_pool_fixture, imgs[0], spec, epsilon=0.3)


def test_perturb_clean_lowers_top_confidence(desk_pool_fixture, exemplars):
    imgs, labels = exemplars
    spec = EnsembleSpec(member_ids=("conv-a",))
    img = imgs[0]
    before = desk_pool_fixture.predict("conv-a", img)
    out = perturb_clean(desk_pool_fixture, img, spec, epsilon=16.0 / 255.0)
    after = desk_pool_fixture.predict("conv-a", out)
    assert after.probs[before.top_class] < before.top_confidence
