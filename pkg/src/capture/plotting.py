"""Render patch scale curves to PNG, one figure per held-out model."""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def plot_scale_curves(csv_path: str | Path, out_dir: str | Path) -> list[Path]:
    """Read a patch-curve CSV (held_out, model, role, scale, success_rate)
    and write <out_dir>/patch-curve-<held_out>.png per held-out model."""
    csv_path, out_dir = Path(csv_path), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    splits: dict[str, dict[str, list[tuple[float, float]]]] = defaultdict(
        lambda: defaultdict(list))
    with csv_path.open() as f:
        for row in csv.DictReader(f):
            splits[row["held_out"]][f"{row['model']} ({row['role']})"].append(
                (float(row["scale"]), float(row["success_rate"])))
    written = []
    for held, series in sorted(splits.items()):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for label, pts in sorted(series.items()):
            pts = sorted(pts)
            ax.plot([p[0] for p in pts], [p[1] for p in pts],
                    marker="o", label=label)
        ax.set_xlabel("patch scale (fraction of image side)")
        ax.set_ylabel("attack success rate")
        ax.set_title(f"held out: {held}")
        ax.set_ylim(-0.02, 1.02)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
        path = out_dir / f"patch-curve-{held}.png"
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written
