"""Report writers: tab-separated tables plus rendered figures.

Every report lands twice in the reports directory: a TSV for machines and
a PNG for humans. Figures use the Agg backend so reports render on
headless boxes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402 - backend must be pinned first

import numpy as np  # noqa: E402

from .bench import PathReport  # noqa: E402
from .classify import Metrics  # noqa: E402


def write_metrics_report(metrics: Metrics, out_dir: str | Path, name: str = "metrics") -> Path:
    """Headline metrics plus the per-class table, TSV + bar figure."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tsv = out_dir / f"{name}.tsv"
    lines = [
        "metric\tvalue",
        f"accuracy\t{metrics.accuracy:.6f}",
        f"weighted_f1\t{metrics.weighted_f1:.6f}",
        f"macro_f1\t{metrics.macro_f1:.6f}",
        "",
        "intent\tprecision\trecall\tf1\tsupport",
    ]
    for c in metrics.per_class:
        lines.append(f"{c.name}\t{c.precision:.6f}\t{c.recall:.6f}\t{c.f1:.6f}\t{c.support}")
    tsv.write_text("\n".join(lines) + "\n", encoding="utf-8")

    fig, ax = plt.subplots(figsize=(max(6, 0.35 * len(metrics.per_class)), 4))
    names = [c.name for c in metrics.per_class]
    ax.bar(range(len(names)), [c.f1 for c in metrics.per_class], color="#2b6cb0")
    ax.axhline(metrics.macro_f1, color="#c05621", linestyle="--", linewidth=1,
               label=f"macro F1 = {metrics.macro_f1:.3f}")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=75, ha="right", fontsize=7)
    ax.set_ylabel("F1")
    ax.set_ylim(0, 1.05)
    ax.set_title(f"Per-intent F1 (accuracy {metrics.accuracy:.3f})")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_dir / f"{name}.png", dpi=120)
    plt.close(fig)
    return tsv


def write_confusion_figure(cm: np.ndarray, names: list[str], out_dir: str | Path,
                           name: str = "confusion") -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(max(5, 0.3 * len(names)),) * 2)
    im = ax.imshow(cm, cmap="Blues")
    ax.set_xticks(range(len(names)))
    ax.set_yticks(range(len(names)))
    ax.set_xticklabels(names, rotation=90, fontsize=6)
    ax.set_yticklabels(names, fontsize=6)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    fig.colorbar(im, shrink=0.8)
    fig.tight_layout()
    path = out_dir / f"{name}.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def write_bench_report(reports: list[PathReport], out_dir: str | Path,
                       name: str = "bench") -> Path:
    """Stage breakdown per path: TSV plus a share figure."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tsv = out_dir / f"{name}.tsv"
    lines = ["path\tstage\tp50_ms\tp95_ms\tmean_ms\tshare"]
    for report in reports:
        lines.append(
            f"{report.path}\ttotal\t{report.total_p50_ms:.3f}\t{report.total_p95_ms:.3f}\t-\t1.0"
        )
        for s in report.stages:
            lines.append(
                f"{report.path}\t{s.stage}\t{s.p50_ms:.3f}\t{s.p95_ms:.3f}\t{s.mean_ms:.3f}\t{s.share:.4f}"
            )
    tsv.write_text("\n".join(lines) + "\n", encoding="utf-8")

    populated = [r for r in reports if r.stages]
    if populated:
        fig, axes = plt.subplots(1, len(populated), figsize=(5.5 * len(populated), 3.6))
        if len(populated) == 1:
            axes = [axes]
        for ax, report in zip(axes, populated):
            stages = [s.stage for s in report.stages]
            ax.barh(range(len(stages)), [s.share * 100 for s in report.stages], color="#2f855a")
            ax.set_yticks(range(len(stages)))
            ax.set_yticklabels(stages, fontsize=8)
            ax.invert_yaxis()
            ax.set_xlabel("% of mean turn time")
            ax.set_title(f"{report.path} path (n={report.n}, p95 {report.total_p95_ms:.1f} ms)")
        fig.tight_layout()
        fig.savefig(out_dir / f"{name}.png", dpi=120)
        plt.close(fig)
    return tsv
