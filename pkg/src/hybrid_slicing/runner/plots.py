"""Static charts from summary and sweep CSVs (needs the ``plot`` extra)."""

from __future__ import annotations

import logging
from pathlib import Path

import pandas as pd

from hybrid_slicing.optimizer.experiments import MODE_ORDER

logger = logging.getLogger(__name__)

SWEEP_LABELS = ("alpha", "slices", "value")


def plot_csv(source: str | Path, output: str | Path) -> Path:
    """Render ``summary.csv`` as bars with IQR whiskers, or a sweep CSV as lines.

    Raises:
        ImportError: matplotlib is not installed
        ValueError: the CSV is neither a summary nor a sweep table
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    frame = pd.read_csv(source)
    modes = [m.value for m in MODE_ORDER]
    fig, ax = plt.subplots(figsize=(6, 4))

    if {"mode", "mean", "q25", "q75"} <= set(frame.columns):
        rows = frame[frame["mode"].isin(modes)].set_index("mode").reindex(modes)
        lower = rows["mean"] - rows["q25"]
        upper = rows["q75"] - rows["mean"]
        ax.bar(modes, rows["mean"], yerr=[lower.clip(lower=0), upper.clip(lower=0)], capsize=4)
        ax.set_ylabel("total PRBs")
        ax.set_title("PRBs per strategy (mean, IQR)")
    else:
        label = next((c for c in SWEEP_LABELS if c in frame.columns), None)
        if label is None or not set(modes) <= set(frame.columns):
            plt.close(fig)
            raise ValueError(f"{source}: not a summary or sweep table (columns {list(frame.columns)})")
        for mode in modes:
            ax.plot(frame[label], frame[mode], marker="o", label=mode)
        ax.set_xlabel(label)
        ax.set_ylabel("total PRBs")
        ax.legend()

    out = Path(output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    logger.info(f"Wrote chart to {out}")
    return out
