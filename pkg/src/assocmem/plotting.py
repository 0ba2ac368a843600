"""Matplotlib renderings of trajectories and ablation tables.

Figures are written to files only; the Agg backend is forced so this works
headless.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .analysis import TABLE_GROUPS, AblationTable  # noqa: E402
from .dynamics import DynamicsParams, integrate_pair  # noqa: E402

PHASE_COLORS = ("#f2e6d9", "#e0ecf7", "#e3f1e0", "#f3e1ec")

RC = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "savefig.dpi": 150,
}


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)


def _shade_phases(ax, phases):
    if not phases:
        return
    start = 0
    for i in range(1, len(phases) + 1):
        if i == len(phases) or phases[i] != phases[start]:
            color = PHASE_COLORS[(phases[start] - 1) % len(PHASE_COLORS)]
            ax.axvspan(start - 0.5, i - 0.5, color=color, lw=0, zorder=0)
            start = i


def plot_trajectories(
    panels: Sequence[tuple[str, Sequence[int]]],
    horizon: int,
    path,
    params: DynamicsParams | None = None,
    phases: Sequence[int] | None = None,
    show_single: bool = False,
):
    """One panel per (title, event steps): w_fast solid, w_slow dashed, events as triangles."""
    params = params or DynamicsParams()
    n = len(panels)
    cols = 2 if n > 1 else 1
    rows = (n + cols - 1) // cols
    with plt.rc_context(RC):
        fig, axes = plt.subplots(rows, cols, figsize=(4.2 * cols, 2.6 * rows), squeeze=False, sharey=True)
        for ax, (title, steps) in zip(axes.flat, panels):
            traj = integrate_pair(steps, horizon, params, "coupled")
            x = [s.step for s in traj]
            _shade_phases(ax, phases)
            ax.plot(x, [s.w_fast for s in traj], "-", color="tab:blue", lw=1.6, label="w_fast")
            ax.plot(x, [s.w_slow for s in traj], "--", color="tab:red", lw=1.4, label="w_slow")
            if show_single:
                single = integrate_pair(steps, horizon, params, "single")
                ax.plot(x, [s.w_fast for s in single], ":", color="0.4", lw=1.2, label="single-timescale")
            ax.plot(list(steps), [0.0] * len(steps), "^", color="tab:green", ms=6, clip_on=False, label="event")
            ax.set_title(title)
            ax.set_xlim(-0.5, horizon - 0.5)
            ax.set_xlabel("document step")
        for ax in axes.flat[n:]:
            ax.set_visible(False)
        for ax in axes[:, 0]:
            ax.set_ylabel("weight")
        axes.flat[0].legend(loc="upper right", fontsize=7)
        fig.tight_layout()
        _save(fig, path)
    return Path(path)


def plot_ablation(table: AblationTable, path):
    """Grouped bars of the per-group means; uniform counts on a secondary axis."""
    labels = [g.description.replace(", ", ",\n") for g in TABLE_GROUPS]
    rows = [table.rows[g] for g in TABLE_GROUPS]
    x = range(len(rows))
    width = 0.38
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(7.0, 3.2))
        ax.bar([i - width / 2 for i in x], [r.coupled for r in rows], width, color="tab:blue", label="coupled w_fast")
        ax.bar([i + width / 2 for i in x], [r.single for r in rows], width, color="0.6", label="single-timescale")
        ax.set_ylabel("mean final weight")
        ax2 = ax.twinx()
        ax2.plot(list(x), [float(r.uniform) for r in rows], "D", color="tab:orange", label="uniform (count)")
        ax2.set_ylabel("mean event count")
        ax2.set_ylim(bottom=0)
        ax.set_xticks(list(x))
        ax.set_xticklabels([f"{lab}\n(N={r.count})" for lab, r in zip(labels, rows)])
        handles = ax.get_legend_handles_labels()
        handles2 = ax2.get_legend_handles_labels()
        ax.legend(handles[0] + handles2[0], handles[1] + handles2[1], loc="upper left", fontsize=7)
        fig.tight_layout()
        _save(fig, path)
    return Path(path)
