"""Matplotlib figure rendering for episode and benchmark reports.

Figures are written straight to files (format from the extension); no
interactive backend is ever required.  matplotlib is imported lazily so the
simulation core stays importable without it.
"""

from __future__ import annotations

import math

import numpy as np

from .harness import BenchmarkTable, EpisodeRecord


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def plot_episode(record: EpisodeRecord, path) -> None:
    """Two stacked panels: angle trajectories and the tracking error."""
    plt = _pyplot()
    fig, (ax_top, ax_bot) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    t = record.times
    ax_top.plot(t, record.theta_set, color="0.6", lw=1.0, ls=":", label=r"$\theta_{set}$", drawstyle="steps-post")
    ax_top.plot(t, record.x_r[:, 0], color="tab:blue", lw=1.2, label=r"$\theta_r$ (reference)")
    ax_top.plot(t, record.x[:, 0], color="tab:red", lw=1.2, ls="--", label=r"$\theta$ (true)")
    ax_top.set_ylabel("angle [rad]")
    ax_top.legend(loc="best", fontsize=9)
    variant = record.meta.get("variant", "")
    form = record.meta.get("form", "")
    ax_top.set_title(f"tracking — {variant} ({form})" if variant else "tracking")

    ax_bot.plot(t, record.e[:, 0], color="tab:purple", lw=1.0)
    ax_bot.axhline(0.0, color="0.8", lw=0.8)
    ax_bot.set_xlabel("time [s]")
    ax_bot.set_ylabel(r"$e_\theta$ [rad]")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_benchmark(table: BenchmarkTable, path) -> None:
    """Bar panels of mean average cost and mean squared tracking error."""
    plt = _pyplot()
    names = [res.name for res in table.results]
    costs = [res.mean_avg_cost for res in table.results]
    cost_err = [res.se_avg_cost for res in table.results]
    e2 = [res.mean_e_theta_sq_deg for res in table.results]
    e2_err = [res.se_e_theta_sq_deg for res in table.results]

    fig, (ax_cost, ax_e2) = plt.subplots(1, 2, figsize=(9, 4))
    xs = np.arange(len(names))
    ax_cost.bar(xs, costs, yerr=cost_err, color="tab:blue", alpha=0.85, capsize=3)
    ax_cost.set_xticks(xs, names, rotation=20, ha="right", fontsize=9)
    ax_cost.set_ylabel("mean average cost")

    ax_e2.bar(xs, e2, yerr=e2_err, color="tab:red", alpha=0.85, capsize=3)
    ax_e2.set_xticks(xs, names, rotation=20, ha="right", fontsize=9)
    ax_e2.set_ylabel(r"mean $\overline{e_\theta^2}$ [deg$^2$]")
    if all(v > 0 for v in e2 if not math.isnan(v)):
        ax_e2.set_yscale("log")

    fig.suptitle(f"{table.form} form, {table.n_envs} paired envs, seed {table.master_seed}", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
