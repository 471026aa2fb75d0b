"""Matplotlib renderings saved next to the CLI's delimited outputs."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from ..explain import HarnessResult  # noqa: E402
from .bench import BenchRow  # noqa: E402


def save_bench_figure(rows: Sequence[BenchRow], path: str | Path) -> Path:
    """Operator seconds vs hierarchy count, log scale."""
    path = Path(path)
    depths = [r.depth for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(depths, [r.materialize_s for r in rows], "o-",
            label="materialize")
    ax.plot(depths, [r.dense_gram_s for r in rows], "s-",
            label="gram (materialized)")
    ax.plot(depths, [r.gram_s for r in rows], "^-", label="gram (factorised)")
    ax.plot(depths, [r.left_s for r in rows], "v--", label="left multiply")
    ax.plot(depths, [r.right_s for r in rows], "d--", label="right multiply")
    ax.set_yscale("log")
    ax.set_xlabel("hierarchies")
    ax.set_ylabel("seconds")
    ax.set_xticks(depths)
    ax.legend(fontsize=8)
    ax.set_title(f"width {rows[0].width} per hierarchy" if rows else "")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_synth_figure(results: Sequence[HarnessResult],
                      path: str | Path) -> Path:
    """Grouped accuracy bars per condition and method, one panel per rho."""
    path = Path(path)
    rhos = sorted({r.rho for r in results})
    methods = list(dict.fromkeys(r.method for r in results))
    conditions = list(dict.fromkeys(r.condition for r in results))
    fig, axes = plt.subplots(1, len(rhos), figsize=(4 * len(rhos), 4),
                             squeeze=False, sharey=True)
    for ax, rho in zip(axes[0], rhos):
        width = 0.8 / max(len(methods), 1)
        for j, method in enumerate(methods):
            xs, ys = [], []
            for i, condition in enumerate(conditions):
                match = [r for r in results if r.rho == rho
                         and r.method == method and r.condition == condition]
                if match:
                    xs.append(i + j * width)
                    ys.append(match[0].accuracy)
            ax.bar(xs, ys, width=width, label=method)
        ax.set_xticks([i + 0.4 - width / 2 for i in range(len(conditions))])
        ax.set_xticklabels(conditions, rotation=30, fontsize=8)
        ax.set_ylim(0, 1.05)
        ax.set_title(f"correlation {rho:g}")
    axes[0][0].set_ylabel("top-1 accuracy")
    axes[0][-1].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_scores_figure(payload: Mapping, path: str | Path) -> Path:
    """Horizontal bars of candidate scores, one panel per hierarchy."""
    path = Path(path)
    rankings = payload.get("rankings", [])
    fig, axes = plt.subplots(len(rankings), 1,
                             figsize=(6, 2 + 1.2 * len(rankings)),
                             squeeze=False)
    for ax, ranking in zip(axes[:, 0], rankings):
        labels = [" / ".join(str(v) for v in c["group"])
                  for c in ranking["candidates"]]
        scores = [c["score"] for c in ranking["candidates"]]
        ax.barh(range(len(scores)), scores)
        ax.set_yticks(range(len(scores)))
        ax.set_yticklabels(labels, fontsize=8)
        ax.invert_yaxis()
        ax.set_xlabel("complaint score (lower is better)")
        ax.set_title(f"drill into {ranking['hierarchy']}"
                     f" ({ranking['attribute']})", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
