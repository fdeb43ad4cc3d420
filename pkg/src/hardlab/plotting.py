"""PNG figures for experiment series (matplotlib, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _column(series, name):
    j = series.columns.index(name)
    return np.array([np.nan if r[j] is None else float(r[j]) for r in series.rows])


def render(outcome, out_dir: Path) -> dict[str, str]:
    """One PNG per plot hint; returns ``{figure name: file name}``."""
    figs = {}
    for hint in outcome.plots:
        s = outcome.series.get(hint.series)
        if s is None or not s.rows:
            continue
        fig, ax = plt.subplots(figsize=(6, 4.2))
        x, y = _column(s, hint.x), _column(s, hint.y)
        if hint.group:
            g = _column(s, hint.group)
            for key in np.unique(g)[:20]:
                m = g == key
                ax.plot(x[m], y[m], marker=".", lw=0.8, alpha=0.7)
        else:
            ax.plot(x, y, marker="o", ms=3, lw=1)
        if hint.logy:
            ax.set_yscale("log")
        ax.set_xlabel(hint.x)
        ax.set_ylabel(hint.y)
        ax.set_title(hint.title)
        ax.grid(alpha=0.3)
        fig.tight_layout()
        name = f"{hint.series}_{hint.y}.png"
        fig.savefig(out_dir / name, dpi=100, metadata={"Software": None})
        plt.close(fig)
        figs[f"{hint.series}:{hint.y}"] = name
    return figs
