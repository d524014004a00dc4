"""CLI behavior: help screens, config precedence, artifacts, exit codes."""

import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from capture.cli import DEFAULTS, _load_config, main
from capture.models.dataset import sample_batch
from capture.store import AssetStore

FIXTURES = str(Path(__file__).resolve().parent.parent / "fixtures")


@pytest.fixture()
def runner():
    return CliRunner()


def _cfg_file(tmp_path, **overrides):
    cfg = {"fixtures": FIXTURES, "store": str(tmp_path / "store"),
           "out": str(tmp_path / "out"), **overrides}
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return str(p)


@pytest.mark.parametrize("cmd", [
    [], ["gen-unrec"], ["gen-patch"], ["assemble"], ["eval-transfer"],
    ["eval-patch-curve"], ["eval-solve"], ["plot-curve"], ["serve"]])
def test_help_screens_exit_zero(runner, cmd):
    result = runner.invoke(main, cmd + ["--help"])
    assert result.exit_code == 0
    assert "Usage" in result.output


def test_config_precedence(tmp_path, monkeypatch):
    # defaults < file < env
    assert _load_config(None)["seed"] == DEFAULTS["seed"]
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"seed": 7, "port": 9000}))
    cfg = _load_config(str(p))
    assert cfg["seed"] == 7 and cfg["port"] == 9000
    monkeypatch.setenv("CAPTURE_SEED", "13")
    cfg = _load_config(str(p))
    assert cfg["seed"] == 13 and cfg["port"] == 9000


def test_bad_config_is_usage_error(runner, tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    result = runner.invoke(main, ["--config", str(p), "assemble",
                                  "--scheme", "clean", "--target", "0"])
    assert result.exit_code == 2


def test_missing_registry_fails_cleanly(runner, tmp_path):
    cfg = _cfg_file(tmp_path, fixtures=str(tmp_path / "nowhere"))
    result = runner.invoke(main, ["--config", cfg, "gen-unrec",
                                  "--method", "cppn", "--target", "0"])
    assert result.exit_code == 1
    assert "registry" in result.output


def test_gen_unrec_writes_asset(runner, tmp_path):
    cfg = _cfg_file(tmp_path)
    result = runner.invoke(main, [
        "--config", cfg, "gen-unrec", "--method", "cppn", "--target", "3",
        "--seed", "5", "--size", "32", "--budget", "3",
        "--fitness-target", "0.0"])
    assert result.exit_code == 0, result.output
    store = AssetStore(tmp_path / "store")
    rec = store.record("unrec-cppn-3-5")
    assert rec.fooling_class == 3
    assert rec.manifest["seed"] == 5
    assert "genome" in rec.manifest
    assert store.image("unrec-cppn-3-5").shape == (32, 32, 3)


def test_assemble_shortage_exits_one(runner, tmp_path):
    cfg = _cfg_file(tmp_path)
    AssetStore(tmp_path / "store")  # empty
    result = runner.invoke(main, ["--config", cfg, "assemble",
                                  "--scheme", "clean", "--target", "0"])
    assert result.exit_code == 1
    assert "error" in result.output


def test_assemble_and_solve_round_trip(runner, tmp_path):
    cfg = _cfg_file(tmp_path)
    store = AssetStore(tmp_path / "store")
    imgs, labels = sample_batch(20, seed=41)
    for i, (img, y) in enumerate(zip(imgs, labels)):
        store.add(f"clean-{i}", img, provenance="clean", true_class=int(y))
    result = runner.invoke(main, ["--config", cfg, "assemble",
                                  "--scheme", "clean", "--target", "4",
                                  "--seed", "2"])
    assert result.exit_code == 0, result.output
    saved = Path(result.output.strip())
    assert saved.exists()
    ch = json.loads(saved.read_text())
    assert len(ch["cells"]) == 9

    result = runner.invoke(main, ["--config", cfg, "eval-solve",
                                  "--schemes", "clean", "--n-challenges", "3",
                                  "--target", "4"])
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "out" / "solve.json").read_text())
    assert report["aggregates"]["solve_rate"]["clean"] is not None
    assert (tmp_path / "out" / "solve.csv").exists()


def test_plot_curve_renders_figures(runner, tmp_path):
    cfg = _cfg_file(tmp_path)
    csv_path = tmp_path / "curve.csv"
    rows = ["held_out,model,role,scale,trials,successes,success_rate,skipped"]
    for role, mid in [("whitebox", "conv-a"), ("heldout", "conv-c")]:
        for s in (0.4, 0.6, 0.8):
            rows.append(f"conv-c,{mid},{role},{s},10,{int(10 * s)},{s},0")
    csv_path.write_text("\n".join(rows) + "\n")
    result = runner.invoke(main, ["--config", cfg, "plot-curve", str(csv_path)])
    assert result.exit_code == 0, result.output
    figs = list((tmp_path / "out" / "figures").glob("*.png"))
    assert figs, "no figures written"


def test_plot_curve_missing_file_is_usage_error(runner, tmp_path):
    cfg = _cfg_file(tmp_path)
    result = runner.invoke(main, ["--config", cfg, "plot-curve",
                                  str(tmp_path / "absent.csv")])
    assert result.exit_code == 2
