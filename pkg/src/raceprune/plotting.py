"""Figure rendering for analysis and gap reports.

Everything here writes to a file; nothing opens a window.
"""

from __future__ import annotations

from collections import Counter

import matplotlib

matplotlib.use("Agg")  # file output only, never an X backend
import matplotlib.pyplot as plt

from .pipeline import STAGES, InstrumentationReport

_STAGE_LABELS = {
    "stc": "single-threaded",
    "swmr": "single-writer read",
    "lo": "lock owned",
    "ea": "never escapes",
    "de_dom": "repeat (before)",
    "de_postdom": "repeat (after)",
}


def stage_figure(report: InstrumentationReport, path: str) -> None:
    """Bar chart: how many accesses each stage retired, plus the rest."""
    counts: Counter[str] = Counter(
        v.by for v in report.verdicts if v.verdict == "eliminated"
    )
    labels = [_STAGE_LABELS[s] for s in STAGES] + ["instrumented"]
    values = [counts.get(s, 0) for s in STAGES] + [len(report.instrumented)]
    colors = ["#4878a8"] * len(STAGES) + ["#b04846"]

    fig, ax = plt.subplots(figsize=(7, 4))
    bars = ax.bar(range(len(values)), values, color=colors)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("accesses")
    ax.set_title(
        f"{report.q_orig} accesses, {report.q_opt} instrumented"
        f" (reduction {report.sir:.2f})"
    )
    for bar, v in zip(bars, values):
        if v:
            ax.annotate(
                str(v),
                (bar.get_x() + bar.get_width() / 2, v),
                ha="center",
                va="bottom",
                fontsize=9,
            )
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def gap_figure(
    total: int,
    instrumented: int,
    traced: int,
    extra: int,
    path: str,
) -> None:
    """Bar chart comparing the static keep set against traced sharing."""
    labels = ["all accesses", "instrumented", "traced shared", "never traced"]
    values = [total, instrumented, traced, extra]
    colors = ["#999999", "#4878a8", "#55a868", "#b04846"]

    fig, ax = plt.subplots(figsize=(6, 4))
    bars = ax.bar(labels, values, color=colors)
    ax.set_ylabel("accesses")
    ratio = extra / total if total else 0.0
    ax.set_title(f"instrumented but never observed shared: {ratio:.2f}")
    for bar, v in zip(bars, values):
        ax.annotate(
            str(v),
            (bar.get_x() + bar.get_width() / 2, v),
            ha="center",
            va="bottom",
            fontsize=9,
        )
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
