"""Figure rendering for trajectories and verification sweeps.

Figures are written straight to files (Agg backend) next to the CSV
output; nothing here opens a window.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .analysis import VerificationReport
from .ssa import Trajectory

__all__ = ["proposition_figure", "termination_figure", "trajectory_figure"]


def trajectory_figure(
    trajectory: Trajectory,
    species: Sequence[str],
    path: str,
    *,
    initial_counts: dict[str, int] | None = None,
    title: str | None = None,
) -> None:
    """Step plot of species counts against simulated time."""
    fig, ax = plt.subplots(figsize=(7, 4))
    times = [0.0] + [record.time for record in trajectory.steps]
    for name in species:
        start = (initial_counts or {}).get(name, 0)
        counts = [start] + [record.solution.count(name) for record in trajectory.steps]
        ax.step(times, counts, where="post", label=name)
    ax.set_xlabel("time")
    ax.set_ylabel("count")
    ax.legend(loc="best", fontsize=8)
    ax.set_title(title or f"trajectory (seed {trajectory.seed})")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def proposition_figure(reports: Iterable[VerificationReport], path: str) -> None:
    """Exact decrement probability vs the 1 - 1/h bound, one curve per l."""
    by_l: dict[int, list[VerificationReport]] = {}
    for report in reports:
        if "l" in report.context and "h" in report.context:
            by_l.setdefault(report.context["l"], []).append(report)
    fig, ax = plt.subplots(figsize=(7, 4))
    bound_drawn = False
    for l in sorted(by_l):
        cells = sorted(by_l[l], key=lambda r: r.context["h"])
        hs = [r.context["h"] for r in cells]
        ax.plot(hs, [r.exact for r in cells], marker=".", label=f"register count {l}")
        if any(r.mc_estimate is not None for r in cells):
            errs = [
                (r.mc_estimate - r.ci_low, r.ci_high - r.mc_estimate)
                for r in cells
                if r.mc_estimate is not None
            ]
            pts = [(r.context["h"], r.mc_estimate) for r in cells if r.mc_estimate is not None]
            ax.errorbar(
                [p[0] for p in pts],
                [p[1] for p in pts],
                yerr=list(zip(*[(lo, hi) for lo, hi in errs])),
                fmt="x",
                markersize=3,
                elinewidth=0.6,
                capsize=2,
                color="gray",
                alpha=0.6,
            )
        if not bound_drawn and all(r.bound is not None for r in cells):
            ax.plot(hs, [r.bound for r in cells], linestyle="--", color="black", label="1 - 1/h")
            bound_drawn = True
    ax.set_xlabel("initial inhibitor count h")
    ax.set_ylabel("correct-decrement probability")
    ax.set_ylim(0.0, 1.02)
    ax.legend(loc="lower right", fontsize=8)
    ax.set_title("inhibited decrement: exact vs bound")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def termination_figure(reports: Iterable[VerificationReport], path: str) -> None:
    """Faithful-run fraction with confidence bars against the product bound."""
    cells = sorted(
        (r for r in reports if r.mc_estimate is not None and "h" in r.context),
        key=lambda r: r.context["h"],
    )
    fig, ax = plt.subplots(figsize=(7, 4))
    if cells:
        hs = [r.context["h"] for r in cells]
        ax.errorbar(
            hs,
            [r.mc_estimate for r in cells],
            yerr=[
                [r.mc_estimate - r.ci_low for r in cells],
                [r.ci_high - r.mc_estimate for r in cells],
            ],
            fmt="o",
            capsize=3,
            label="faithful fraction (99% CI)",
        )
        ax.plot(hs, [r.bound for r in cells], linestyle="--", marker="s", label="product bound")
    ax.set_xlabel("initial inhibitor count h")
    ax.set_ylabel("probability")
    ax.set_ylim(0.0, 1.02)
    ax.legend(loc="lower right", fontsize=8)
    ax.set_title("probabilistic termination check")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
