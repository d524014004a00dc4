"""Gradient-based unrecognizable images and clean-image perturbation.

Ascent starts from uniform noise and repeatedly steps along the sign of the
mean member gradient of log p(target), clamping to [0, 1]. The result fools
the white-box members with very high confidence but lives in the exact
resampling grid the models see, so it falls apart under a resize.
"""

from __future__ import annotations

import numpy as np

from ..imaging import validate_image
from ..models.gateway import EnsembleSpec, ModelPool


def _mean_member_gradient(pool: ModelPool, ensemble: EnsembleSpec,
                          img: np.ndarray, target: int) -> np.ndarray:
    grads = [pool.input_gradient(mid, img, target) for mid in ensemble.member_ids]
    return np.mean(grads, axis=0)


def gradient_ascent_image(pool: ModelPool, target: int, ensemble: EnsembleSpec,
                          steps: int = 500, step_size: float = 1.0 / 255.0,
                          seed: int = 0,
                          size: tuple[int, int] | None = None,
                          stop_confidence: float | None = None) -> np.ndarray:
    """Maximize mean member log p(target) by iterated sign steps.

    `size` defaults to the members' shared input size; pass e.g. (224, 224)
    to generate at display resolution (gradients flow through the adapters'
    own resize). `stop_confidence` ends the loop early once every member's
    target confidence reaches it, analogous to the EAs' fitness target.
    """
    if size is None:
        sizes = {pool.handle(m).input_size for m in ensemble.member_ids}
        if len(sizes) != 1:
            raise ValueError("members disagree on input size; pass size= explicitly")
        size = next(iter(sizes))
    rng = np.random.default_rng(seed)
    img = rng.uniform(0.0, 1.0, size=(size[0], size[1], 3))
    for _ in range(int(steps)):
        if stop_confidence is not None:
            confs = [pool.predict(m, img).probs[target] for m in ensemble.member_ids]
            if min(confs) >= stop_confidence:
                break
        g = _mean_member_gradient(pool, ensemble, img, target)
        img = np.clip(img + step_size * np.sign(g), 0.0, 1.0)
    return img


def perturb_clean(pool: ModelPool, img: np.ndarray, ensemble: EnsembleSpec,
                  epsilon: float) -> np.ndarray:
    """One sign-of-gradient step away from the image's current top class.

    The output differs from the input by at most epsilon per value
    (sup-norm bound holds by construction).
    """
    if not 0.0 < epsilon <= 0.25:
        raise ValueError("epsilon outside (0, 0.25]")
    img = validate_image(img)
    member_probs = np.mean([pool.predict(mid, img).probs for mid in ensemble.member_ids], axis=0)
    top = int(member_probs.argmax())
    g = _mean_member_gradient(pool, ensemble, img, top)
    out = np.clip(img - epsilon * np.sign(g), 0.0, 1.0)
    # clamping can only shrink the step, never grow it
    return np.clip(out, img - epsilon, img + epsilon)
