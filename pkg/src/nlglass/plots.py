"""Figure rendering for the report paths.

Every CLI command that writes a delimited table also renders a matplotlib
figure next to it (PNG, Agg backend); these helpers keep all styling in one
place. Margins can be infinite for deterministic-level passes, so bar plots
clip them to the plot window and annotate.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_STATUS_COLOR = {"PASS": "#2a9d3a", "FAIL": "#c0392b", "INCONCLUSIVE": "#e0a030"}


def render_scan(rows, path):
    """Phase-diagram panels from scan rows (dicts with the CSV columns)."""
    alphas = sorted({r["alpha"] for r in rows})
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for a in alphas:
        pts = [(r["beta"], r["thm1_total"]) for r in rows
               if r["alpha"] == a and r["thm1_valid"]]
        if not pts:
            continue
        b, v = zip(*sorted(pts))
        ax1.plot(b, v, marker=".", label=f"alpha={a:g}")
    ax1.axhline(0.0, color="k", lw=0.8, ls=":")
    ax1.set_xscale("log")
    ax1.set_xlabel("beta")
    ax1.set_ylabel("order-parameter lower bound")
    ax1.set_title("low-temperature bound")
    if alphas:
        ax1.legend(fontsize=7)

    pairs = sorted({(r["alpha"], r["thm3_threshold"]) for r in rows})
    if pairs:
        a, th = zip(*pairs)
        ax2.plot(a, th, color="#1f77b4", marker=".")
        ax2.fill_between(a, 0, th, alpha=0.15, color="#1f77b4",
                         label="no long-range order")
        ax2.legend(fontsize=8)
    ax2.set_xlabel("alpha")
    ax2.set_ylabel("beta* (high-T threshold)")
    ax2.set_title("paramagnetic region")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_estimates(names, means, ses, path, title="disorder averages"):
    """Horizontal point-with-error-bar chart of estimate tables."""
    y = np.arange(len(names))
    fig, ax = plt.subplots(figsize=(7, max(2.0, 0.3 * len(names) + 1)))
    ax.errorbar(means, y, xerr=np.asarray(ses), fmt="o", ms=4,
                color="#1f77b4", ecolor="#888888", capsize=2)
    ax.set_yticks(y)
    ax.set_yticklabels(names, fontsize=7)
    ax.invert_yaxis()
    ax.axvline(0.0, color="k", lw=0.8, ls=":")
    ax.set_xlabel("estimate")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_check_margins(reports, path):
    """One bar per check report, colored by status, margins clipped for display."""
    names = [r.name for r in reports]
    margins = []
    labels = []
    for r in reports:
        m = r.margin
        if math.isinf(m):
            labels.append("inf")
            m = math.copysign(50.0, m)
        elif math.isnan(m):
            labels.append("nan")
            m = 0.0
        else:
            labels.append(f"{m:+.3g}")
            m = max(-50.0, min(50.0, m))
        margins.append(m)
    colors = [_STATUS_COLOR.get(r.status, "#888888") for r in reports]
    y = np.arange(len(names))
    fig, ax = plt.subplots(figsize=(7, max(2.0, 0.4 * len(names) + 1)))
    ax.barh(y, margins, color=colors)
    for k, lab in enumerate(labels):
        ax.text(margins[k], y[k], " " + lab, va="center", fontsize=7)
    ax.set_yticks(y)
    ax.set_yticklabels(names, fontsize=8)
    ax.invert_yaxis()
    ax.axvline(0.0, color="k", lw=0.8)
    ax.set_xlabel("margin (SE units; absolute for deterministic checks)")
    ax.set_title("verification margins")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
