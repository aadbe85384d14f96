"""Figure rendering for the benchmark and score-map reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .benchmark import BenchmarkReport
from .metrics import PCScoreMap

__all__ = ["benchmark_figure", "score_map_figure"]


def benchmark_figure(report: BenchmarkReport, path) -> None:
    """Boxplots of per-replication prediction R2 for every cell."""
    cfg = report.config
    n_rows = len(cfg.covariate_counts)
    n_cols = len(cfg.scenarios)
    fig, axes = plt.subplots(
        n_rows, n_cols,
        figsize=(3.0 * n_cols, 2.8 * n_rows),
        squeeze=False,
        sharey="row",
    )
    for i, n_cov in enumerate(cfg.covariate_counts):
        for j, scenario in enumerate(cfg.scenarios):
            ax = axes[i][j]
            series, labels = [], []
            for method in cfg.methods:
                good = [r.r2_p for r in report.cell(scenario, n_cov, method) if r.ok]
                if good:
                    series.append(good)
                    labels.append(method)
            if series:
                ax.boxplot(series)
                ax.set_xticks(range(1, len(labels) + 1), labels=labels)
            ax.set_title(f"{scenario}, {n_cov} cov.", fontsize=10)
            if j == 0:
                ax.set_ylabel("prediction R2")
            ax.tick_params(axis="x", labelsize=8)
    fig.suptitle(f"{cfg.replications} replications, n={cfg.n_train}", fontsize=11)
    fig.tight_layout(rect=(0, 0, 1, 0.95))
    fig.savefig(path, dpi=150)
    plt.close(fig)


def score_map_figure(pm: PCScoreMap, path) -> None:
    """Heatmap of the predicted score with the training-score hull."""
    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    mesh = ax.imshow(
        pm.scores.T,
        origin="lower",
        extent=(pm.x1[0], pm.x1[-1], pm.x2[0], pm.x2[-1]),
        aspect="auto",
        cmap="viridis",
    )
    fig.colorbar(mesh, ax=ax, label=f"predicted score, response PC {pm.response_component + 1}")
    ax.plot(pm.train_scores[:, 0], pm.train_scores[:, 1], "k.", markersize=3, alpha=0.6)
    if len(pm.hull):
        loop_x = list(pm.hull[:, 0]) + [pm.hull[0, 0]]
        loop_y = list(pm.hull[:, 1]) + [pm.hull[0, 1]]
        ax.plot(loop_x, loop_y, "w-", linewidth=1.2)
    ax.set_xlabel(f"covariate {pm.covariate + 1} score 1")
    ax.set_ylabel(f"covariate {pm.covariate + 1} score 2")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
