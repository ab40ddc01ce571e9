"""Static figures for experiment reports, written straight to file."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .experiments import COMPARISON, DISTANCE, LANDMARK, TACTILE  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.figsize": (6.0, 3.8),
    "svg.hashsalt": "bodyschema",
    "svg.fonttype": "none",
}

VARIANT_STYLE = {"single": "k-o", "triangulation": "C0-s"}


def _profile(ax, summary):
    for variant, rows in summary["profile"].items():
        xs = [r["u_mm"] if r["u_mm"] is not None else i for i, r in enumerate(rows)]
        ax.plot(xs, [r["variable_error"] for r in rows], VARIANT_STYLE.get(variant, "-o"),
                label=variant, markersize=4)
    ax.set_xlabel("position along segment (mm)")
    ax.set_ylabel("variable error (mm)")
    if "segment_length_mm" in summary:
        ax.set_xlim(0, summary["segment_length_mm"])
        for x, name in zip((0, summary["segment_length_mm"]), summary.get("landmarks", ())):
            ax.axvline(x, color="0.7", lw=0.8, ls=":")
            ax.annotate(name, (x, 0), textcoords="offset points", xytext=(3, 3), fontsize=8)
    ax.set_ylim(bottom=0)
    ax.legend(frameon=False)


def _extents(ax, summary):
    ex = summary["extents"]
    ax.bar(range(len(ex)), [e["ratio"] for e in ex],
           color=["C1" if e["kind"] == "width" else "C0" for e in ex])
    ax.axhline(1.0, color="k", lw=0.8)
    ax.set_xticks(range(len(ex)))
    ax.set_xticklabels([e["id"] for e in ex], rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("judged / veridical extent")


def _distances(ax, summary):
    pairs = summary["pairs"]
    for orient, color in (("across", "C1"), ("along", "C0")):
        sel = [p for p in pairs if p["orientation"] == orient]
        ax.plot([p["veridical_mm"] for p in sel], [p["expressed_mm"] for p in sel], "o",
                color=color, label=orient)
    lim = max(max(p["veridical_mm"], p["expressed_mm"]) for p in pairs) * 1.1
    ax.plot([0, lim], [0, lim], color="0.6", lw=0.8, ls="--")
    ax.set_xlabel("veridical distance (mm)")
    ax.set_ylabel("expressed distance (mm)")
    ax.legend(frameon=False)


def plot_report(report, path):
    """Render the task's summary figure to ``path`` (format from the suffix)."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        task = report.task
        if task in (TACTILE, COMPARISON):
            _profile(ax, report.summary)
        elif task == LANDMARK:
            _extents(ax, report.summary)
        elif task == DISTANCE:
            _distances(ax, report.summary)
        ax.set_title(f"{report.scenario_id} ({task})", fontsize=10)
        fig.tight_layout()
        fig.savefig(path, metadata={"Date": None})
        plt.close(fig)
    return path
