"""Matplotlib figures for sweep reports. Uses the Agg backend; everything goes to files."""

from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .model import TECH_GROUPS  # noqa: E402

_GROUP_COLORS = {"nuclear": "#7b3294", "renewables": "#1b9e77", "conventional": "#636363"}


def _feasible(rows):
    return [r for r in rows if not r.infeasible]


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_frontier(frontiers: dict, path, highlight=None):
    """Expected profit against CVaR, one curve per labelled frontier.

    ``frontiers`` maps a legend label to a list of frontier rows; ``highlight``
    marks a selected row on the first curve.
    """
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for label, rows in frontiers.items():
        rows = _feasible(rows)
        ax.plot([r.cvar_profit for r in rows], [r.expected_profit for r in rows], "o-", ms=4, label=label)
        for r in rows[:: max(1, len(rows) // 6)]:
            ax.annotate(f"{r.qft:g}", (r.cvar_profit, r.expected_profit), fontsize=7,
                        xytext=(3, 3), textcoords="offset points")
    if highlight is not None:
        ax.plot(highlight.cvar_profit, highlight.expected_profit, "r*", ms=12, label=f"selected qft={highlight.qft:g}")
    ax.set_xlabel("CVaR of profit (EUR)")
    ax.set_ylabel("Expected profit (EUR)")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_prices(rows, path):
    rows = _feasible(rows)
    q = [r.qft for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(q, [r.pf for r in rows], "o-", label="futures price")
    ax.plot(q, [r.expected_spot_price for r in rows], "s-", label="expected spot price")
    ax.set_xlabel("Futures commitment (MWh)")
    ax.set_ylabel("EUR/MWh")
    ax.grid(alpha=0.3)
    ax.legend()
    return _save(fig, path)


def plot_mix(rows, path):
    """Stacked bars of expected strategic output by group, futures vs spot panels."""
    rows = _feasible(rows)
    q = [r.qft for r in rows]
    width = 0.8 * (q[1] - q[0]) if len(q) > 1 else 1.0
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    for ax, side, title in ((axes[0], "futures", "Futures market"), (axes[1], "spot", "Spot market")):
        bottom = [0.0] * len(rows)
        for g in TECH_GROUPS:
            h = [r.mix[g][side] for r in rows]
            ax.bar(q, h, width=width, bottom=bottom, color=_GROUP_COLORS[g], label=g)
            bottom = [b + x for b, x in zip(bottom, h)]
        ax.set_title(title)
        ax.set_xlabel("Futures commitment (MWh)")
    axes[0].set_ylabel("Expected production (MWh)")
    axes[1].legend(fontsize=8)
    return _save(fig, path)


def plot_profit_violins(detail_rows, path, cvar_by_qft=None):
    """Per-qft profit distributions from a detail CSV, with the mean (and CVaR if given)."""
    by_q = defaultdict(list)
    mean = defaultdict(list)
    for rec in detail_rows:
        q, v = float(rec["qft"]), float(rec["profit"])
        by_q[q].append(v)
        mean[q].append(v * float(rec["prob"]))
    qs = sorted(by_q)
    data = [by_q[q] for q in qs]
    width = 0.8 * (qs[1] - qs[0]) if len(qs) > 1 else 1.0
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.violinplot(data, positions=qs, widths=width, showextrema=False)
    ax.plot(qs, [math.fsum(mean[q]) for q in qs], "b-", label="mean")
    if cvar_by_qft:
        ax.plot(qs, [cvar_by_qft[q] for q in qs], "r-", label="CVaR")
    ax.set_xlabel("Futures commitment (MWh)")
    ax.set_ylabel("Profit (EUR)")
    ax.legend()
    return _save(fig, path)
