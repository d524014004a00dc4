from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capture.patching import (PatchAsset, PatchTransform, PlacementError,
                              TransformDistribution, apply_patch,
                              apply_patch_vjp, disc_mask, new_patch,
                              sample_transform)


def test_disc_mask_geometry():
    m = disc_mask(9)
    assert m[4, 4]             # center inside
    assert not m[0, 0]         # corner outside
    assert m.sum() < 81
    # symmetric under 90-degree rotation
    np.testing.assert_array_equal(m, np.rot90(m))


def test_new_patch_initialization():
    a = new_patch(16, target_class=3, seed=0)
    assert a.patch.shape == (16, 16, 3)
    assert 0.4 <= a.patch.min() and a.patch.max() <= 0.6
    assert a.side == 16
    assert a.target_class == 3


def test_apply_patch_only_touches_disc():
    a = new_patch(10, 0, seed=1)
    host = np.zeros((32, 32, 3))
    t = PatchTransform(0.0, 0.5, (15.5, 15.5))
    out = apply_patch(a, host, t)
    changed = np.any(out != host, axis=2)
    d = 0.5 * 32
    ys, xs = np.mgrid[0:32, 0:32]
    dist = np.sqrt((ys - 15.5) ** 2 + (xs - 15.5) ** 2)
    assert not changed[dist > d / 2 + 1e-9].any()
    assert changed[dist < d / 2 - 1.0].any()


def test_apply_patch_identity_at_full_cover():
    """At scale 1.0 with no rotation and a patch the same side as the host,
    the in-disc pixels come back within bilinear tolerance."""
    rng = np.random.default_rng(2)
    a = new_patch(32, 0, seed=2)
    a.patch = rng.random((32, 32, 3))
    host = np.zeros((32, 32, 3))
    out = apply_patch(a, host, PatchTransform(0.0, 1.0, (15.5, 15.5)))
    inside = disc_mask(32)
    np.testing.assert_allclose(out[inside], a.patch[inside], atol=1e-9)


def test_placement_error_when_disc_leaves_host():
    a = new_patch(8, 0, seed=0)
    with pytest.raises(PlacementError):
        apply_patch(a, np.zeros((32, 32, 3)), PatchTransform(0.0, 0.5, (2.0, 2.0)))


def test_vjp_is_exact_adjoint():
    """<J p, g> == <p, J^T g> for the linear warp, random directions."""
    rng = np.random.default_rng(3)
    a = new_patch(12, 0, seed=4)
    host = np.zeros((32, 32, 3))
    t = PatchTransform(17.0, 0.55, (14.0, 17.0))
    base = apply_patch(a, host, t)
    p_dir = rng.standard_normal(a.patch.shape)
    g = rng.standard_normal(host.shape)
    # forward directional derivative via linearity of the warp in the patch
    a2 = PatchAsset(patch=a.patch + p_dir, mask=a.mask, target_class=0,
                    trained_against=None, seed=0)
    jp = apply_patch(a2, host, t) - base
    lhs = float((jp * g).sum())
    jtg = apply_patch_vjp(a, host.shape[:2], t, g)
    rhs = float((p_dir * jtg).sum())
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_vjp_matches_finite_differences(desk_pool_fixture):
    """Gradient of log p(target | apply(patch)) w.r.t. patch pixels vs
    central differences: 5 coords x 5 seeds, rel err <= 1e-3."""
    pool = desk_pool_fixture
    mid = pool.ids[0]
    target = 0
    rng0 = np.random.default_rng(0)
    host = rng0.random((32, 32, 3))
    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        a = new_patch(12, target, seed=seed)
        a.patch = rng.uniform(0.05, 0.95, a.patch.shape)
        t = PatchTransform(float(rng.uniform(-40, 40)), 0.6, (15.5, 15.5))

        def objective(patch):
            tmp = PatchAsset(patch=patch, mask=a.mask, target_class=target,
                             trained_against=None, seed=0)
            img = apply_patch(tmp, host, t)
            return float(np.log(pool.predict(mid, img).probs[target]))

        img = apply_patch(a, host, t)
        grad_host = pool.input_gradient(mid, img, target)
        grad_patch = apply_patch_vjp(a, host.shape[:2], t, grad_host)
        eps = 1e-6
        for _ in range(5):
            # probe pixels the warp actually samples (nonzero adjoint)
            nz = np.argwhere(np.abs(grad_patch) > 1e-12)
            idx = tuple(nz[int(rng.integers(len(nz)))])
            hi, lo = a.patch.copy(), a.patch.copy()
            hi[idx] += eps
            lo[idx] -= eps
            fd = (objective(hi) - objective(lo)) / (2 * eps)
            rel = abs(grad_patch[idx] - fd) / max(abs(fd), 1e-8)
            assert rel <= 1e-3


def test_sample_transform_respects_bounds():
    dist = TransformDistribution(rotation_range=(-10, 10), scale_range=(0.3, 0.6))
    rng = np.random.default_rng(5)
    for _ in range(200):
        t = sample_transform(dist, (32, 32), rng)
        assert -10 <= t.rotation_deg <= 10
        assert 0.3 <= t.scale <= 0.6
        # disc fully inside: apply_patch must not raise
        apply_patch(new_patch(8, 0, seed=0), np.zeros((32, 32, 3)), t)


def test_transform_distribution_validation():
    with pytest.raises(ValueError):
        TransformDistribution(scale_range=(0.0, 0.5))
    with pytest.raises(ValueError):
        TransformDistribution(rotation_range=(10, -10))
    with pytest.raises(ValueError):
        PatchTransform(0.0, 1.5, (0.0, 0.0))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.floats(-90, 90),
       st.floats(0.2, 1.0, exclude_max=False))
def test_apply_patch_output_stays_in_range(seed, rot, scale):
    rng = np.random.default_rng(seed)
    a = new_patch(10, 0, seed=seed)
    a.patch = rng.random(a.patch.shape)
    host = rng.random((32, 32, 3))
    t = PatchTransform(rot, scale, (15.5, 15.5))
    out = apply_patch(a, host, t)
    assert out.min() >= 0.0 and out.max() <= 1.0
    assert out.shape == host.shape
