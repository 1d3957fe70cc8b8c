"""Benchmark report writer: JSON document, CSV summary, and figures."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .simulate import METRIC_CUTOFFS, BenchmarkReport


def write_report(report: BenchmarkReport, out_dir: str | Path) -> dict[str, Path]:
    """Write report.json, metrics.csv and the figures; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": out / "report.json",
        "csv": out / "metrics.csv",
        "metrics_fig": out / "metrics.png",
        "rounds_fig": out / "rounds.png",
    }

    paths["report"].write_text(report.canonical_json() + "\n", encoding="utf-8")

    with open(paths["csv"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "cutoff", "value"])
        for n in METRIC_CUTOFFS:
            writer.writerow(["recall", n, f"{report.recall[n]:.6f}"])
        for n in METRIC_CUTOFFS:
            writer.writerow(["ndcg", n, f"{report.ndcg[n]:.6f}"])
        for n in METRIC_CUTOFFS:
            writer.writerow(["csr", n, f"{report.csr[n]:.6f}"])
        writer.writerow(["pass_rate", "", f"{report.pass_rate:.6f}"])
        writer.writerow(["avg_rounds", "", f"{report.avg_rounds:.6f}"])

    _metrics_figure(report, paths["metrics_fig"])
    _rounds_figure(report, paths["rounds_fig"])
    return paths


def _metrics_figure(report: BenchmarkReport, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    cutoffs = list(METRIC_CUTOFFS)
    width = 0.25
    positions = range(len(cutoffs))
    ax.bar([p - width for p in positions], [report.recall[n] for n in cutoffs],
           width=width, label="recall")
    ax.bar(list(positions), [report.ndcg[n] for n in cutoffs],
           width=width, label="ndcg")
    ax.bar([p + width for p in positions], [report.csr[n] for n in cutoffs],
           width=width, label="csr")
    ax.set_xticks(list(positions))
    ax.set_xticklabels([f"@{n}" for n in cutoffs])
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("score")
    ax.set_title(
        f"{report.config.mode} benchmark "
        f"(PR {report.pass_rate:.2f}, AR {report.avg_rounds:.2f})"
    )
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _rounds_figure(report: BenchmarkReport, path: Path) -> None:
    t_max = 1 if report.config.mode == "SR" else report.config.t_max
    rounds = [t.rounds if t.rounds is not None else t_max + 1 for t in report.traces]
    fig, ax = plt.subplots(figsize=(6, 4))
    bins = [x + 0.5 for x in range(0, t_max + 2)]
    ax.hist(rounds, bins=bins, edgecolor="black")
    ax.set_xticks(list(range(1, t_max + 2)))
    ax.set_xlabel(f"rounds to success ({t_max + 1} = failed)")
    ax.set_ylabel("users")
    ax.set_title("Interaction rounds")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
