"""Report rendering: delimited output plus matplotlib figures on disk."""

from __future__ import annotations

import csv
from dataclasses import asdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .bench import CATEGORIES, CATEGORY_LABELS, BenchResult, aggregate, emit_report


def write_subtask_csv(result: BenchResult, path) -> None:
    fields = [
        "scenario_id", "category", "goal_index", "outcome",
        "elapsed", "llm_calls", "repair_iters",
    ]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in result.per_subtask:
            writer.writerow(asdict(row))


def render_figures(result: BenchResult, out_dir) -> list[Path]:
    """Completion and timing bar charts, one PNG per metric."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    agg = aggregate(result)
    cats = [c for c in CATEGORIES if c in agg]
    labels = [CATEGORY_LABELS[c] for c in cats]
    written = []

    fig, ax = plt.subplots(figsize=(6, 4))
    x = range(len(cats))
    completed = [agg[c]["completed"] for c in cats]
    incomplete = [agg[c]["incomplete"] for c in cats]
    ax.bar(x, completed, label="Completed", color="#4c8f4c")
    ax.bar(x, incomplete, bottom=completed, label="Incomplete", color="#b05050")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels)
    ax.set_ylabel("Sub-goals")
    ax.set_title("Sub-goal completion by category")
    ax.legend()
    path = out_dir / "completion.png"
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    for metric, title, fname in [
        ("mean_time_per_scenario_completed", "Mean seconds per scenario (completed)", "time_per_scenario.png"),
        ("mean_time_per_subtask_completed", "Mean seconds per sub-goal (completed)", "time_per_subgoal.png"),
    ]:
        values = [agg[c][metric] or 0.0 for c in cats]
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.bar(range(len(cats)), values, color="#4c6fb0")
        ax.set_xticks(range(len(cats)))
        ax.set_xticklabels(labels)
        ax.set_ylabel("seconds")
        ax.set_title(title)
        path = out_dir / fname
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return written


def write_report_files(result: BenchResult, out_dir, figures: bool = True) -> dict:
    """Write report.txt, report.json, per_subtask.csv and figures/."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    text = emit_report(result, "TextTable")
    (out_dir / "report.txt").write_text(text, encoding="utf-8")
    paths["text"] = out_dir / "report.txt"
    (out_dir / "report.json").write_text(
        emit_report(result, "StructuredData"), encoding="utf-8"
    )
    paths["json"] = out_dir / "report.json"
    write_subtask_csv(result, out_dir / "per_subtask.csv")
    paths["csv"] = out_dir / "per_subtask.csv"
    if figures:
        paths["figures"] = render_figures(result, out_dir / "figures")
    return paths
