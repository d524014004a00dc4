"""Bot solver, majority vote, and the evaluation report plumbing."""

import json

import numpy as np
import pytest

from capture.botsim import (BotConfig, EvalReport, run_challenge_solve_eval,
                            solve_challenge)
from capture.challenge import Challenge, ChallengeSpec, assemble, default_spec, verify
from capture.models.adapters import Adapter
from capture.models.dataset import CLASS_NAMES, sample_batch
from capture.models.gateway import ClassifierHandle, ModelPool
from capture.store import AssetStore


def test_bot_config_validation():
    with pytest.raises(ValueError):
        BotConfig(solver_models=())
    with pytest.raises(ValueError):
        BotConfig(solver_models=("conv-a",), decision_rule="vibes")
    with pytest.raises(ValueError):
        BotConfig(solver_models=("conv-a",), decision_rule="threshold-match")
    BotConfig(solver_models=("conv-a",), decision_rule="threshold-match",
              threshold=0.5)


def test_eval_report_round_trips(tmp_path):
    rep = EvalReport(experiment="challenge-solve",
                     per_item=[{"scheme": "clean", "solved": 1},
                               {"scheme": "clean", "solved": 0}],
                     aggregates={"solve_rate": {"clean": 0.5}},
                     config={"n_challenges": 2}, seed=3)
    rep.write_json(tmp_path / "r.json")
    rep.write_csv(tmp_path / "r.csv")
    loaded = json.loads((tmp_path / "r.json").read_text())
    assert loaded["aggregates"]["solve_rate"]["clean"] == 0.5
    assert loaded["seed"] == 3
    lines = (tmp_path / "r.csv").read_text().strip().splitlines()
    assert lines[0] == "scheme,solved"
    assert len(lines) == 3


class _BucketVoter(Adapter):
    """Votes `target` on a fixed set of brightness buckets, class 9 otherwise.

    Test images are constant grids with mean (k + 0.5) / 10, so bucket k
    identifies cell k exactly even after PNG quantization.
    """

    differentiable = False

    def __init__(self, target: int, marked: set[int]):
        self.target = target
        self.marked = marked

    def predict_batch(self, imgs):
        out = np.full((len(imgs), 10), 0.1 / 9.0)
        for i, img in enumerate(imgs):
            bucket = int(img.mean() * 10)
            out[i, self.target if bucket in self.marked else 9] = 0.9
        return out

    def input_gradient_batch(self, imgs, target):
        raise NotImplementedError


def _voter_pool(target, marks_by_model):
    handles = [
        ClassifierHandle(id=mid, input_size=(8, 8), label_count=10,
                         preprocessing=[], adapter=_BucketVoter(target, marked))
        for mid, marked in marks_by_model.items()]
    return ModelPool(handles, class_names=list(CLASS_NAMES))


def _bucket_store(tmp_path):
    store = AssetStore(tmp_path / "store")
    for k in range(9):
        img = np.full((8, 8, 3), (k + 0.5) / 10.0)
        store.add(f"cell-{k}", img, provenance="clean", true_class=k)
    return store


def _bucket_challenge():
    spec = ChallengeSpec(target_class=1, scheme="clean", n_clean_decoy=8, seed=0)
    return Challenge(challenge_id="c0", prompt="p",
                     cells=tuple(f"cell-{k}" for k in range(9)),
                     answer_key=frozenset({1}), spec=spec, created_at=0.0)


def test_solve_majority_vote_is_strict(tmp_path):
    # A marks {0, 1}, B marks {1, 2}, C marks {1, 3}: only cell 1 has 2 votes
    pool = _voter_pool(1, {"a": {0, 1}, "b": {1, 2}, "c": {1, 3}})
    store = _bucket_store(tmp_path)
    ch = _bucket_challenge()
    bot = BotConfig(solver_models=("a", "b", "c"))
    assert solve_challenge(pool, bot, ch, store) == {1}
    # 2 solvers also need 2 votes, so disagreements drop out
    bot2 = BotConfig(solver_models=("a", "b"))
    assert solve_challenge(pool, bot2, ch, store) == {1}
    # a single solver keeps everything it marked
    bot1 = BotConfig(solver_models=("a",))
    assert solve_challenge(pool, bot1, ch, store) == {0, 1}


def test_solve_threshold_rule(tmp_path):
    pool = _voter_pool(1, {"a": {0, 1}})
    store = _bucket_store(tmp_path)
    ch = _bucket_challenge()
    bot = BotConfig(solver_models=("a",), decision_rule="threshold-match",
                    threshold=0.5)
    assert solve_challenge(pool, bot, ch, store) == {0, 1}
    # a bar above the voter's 0.9 confidence selects nothing
    bot_hi = BotConfig(solver_models=("a",), decision_rule="threshold-match",
                       threshold=0.95)
    assert solve_challenge(pool, bot_hi, ch, store) == set()


@pytest.fixture(scope="module")
def clean_store(tmp_path_factory):
    store = AssetStore(tmp_path_factory.mktemp("botsim-store"))
    imgs, labels = sample_batch(20, seed=400)
    for i, (img, y) in enumerate(zip(imgs, labels)):
        store.add(f"clean-{i}", img, provenance="clean", true_class=int(y))
    return store


def test_bot_solves_clean_challenges(desk_pool_fixture, clean_store):
    bot = BotConfig(solver_models=("conv-a", "conv-b", "conv-c"))
    spec = default_spec("clean", target_class=2, seed=11)
    ch = assemble(spec, clean_store, class_names=desk_pool_fixture.class_names)
    selection = solve_challenge(desk_pool_fixture, bot, ch, clean_store)
    assert verify(ch, selection)


def test_challenge_solve_eval_clean_baseline(desk_pool_fixture, clean_store):
    bot = BotConfig(solver_models=("conv-a", "conv-b", "conv-c"))
    rep = run_challenge_solve_eval(desk_pool_fixture, bot, ["clean"],
                                   n_challenges=5, store=clean_store,
                                   target_class=2, seed=0)
    assert rep.experiment == "challenge-solve"
    assert len(rep.per_item) == 5
    assert rep.aggregates["solve_rate"]["clean"] >= 0.8
