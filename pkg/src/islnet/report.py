"""Matplotlib rendering of experiment results to PNG files.

Figures are a convenience layer next to the delimited outputs; the CSVs
remain the canonical, byte-reproducible artifacts.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_RC = {
    "figure.figsize": (7.0, 4.2),
    "figure.dpi": 140,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
    "legend.fontsize": 8,
}


def _new_axes():
    plt.rcParams.update(_RC)
    return plt.subplots()


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def availability_figure(feature_rows, path):
    fig, ax = _new_axes()
    labels = [r[0] for r in feature_rows]
    values = [r[6] for r in feature_rows]
    colors = ["tab:blue" if r[1] == "intra" else "tab:green" for r in feature_rows]
    ax.bar(range(len(labels)), values, color=colors)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right")
    ax.set_ylabel("availability ratio")
    ax.set_ylim(0, 1.02)
    ax.set_title("ISL availability by connection feature")
    _save(fig, path)


def capacity_figure(pattern_rows, path):
    fig, ax = _new_axes()
    labels = [r[0] for r in pattern_rows]
    avail = [r[5] / 1000.0 for r in pattern_rows]
    allup = [r[3] / 1000.0 for r in pattern_rows]
    x = range(len(labels))
    ax.bar(x, avail, label="time-averaged available", color="tab:green")
    ax.plot(x, allup, "k--", marker="o", markersize=3, label="all links up")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=45, ha="right")
    ax.set_ylabel("capacity (Tbps)")
    ax.set_title("Network capacity under the unreliable-link model")
    ax.legend()
    _save(fig, path)


def stretch_figure(rows, path):
    fig, ax = _new_axes()
    patterns = sorted({r["pattern"] for r in rows})
    for pattern in patterns:
        sub = [r for r in rows if r["pattern"] == pattern]
        sub.sort(key=lambda r: r["phase_factor"])
        ax.plot([r["phase_factor"] for r in sub], [r["weighted_stretch"] for r in sub],
                marker="o", markersize=3, label=pattern)
    ax.set_xlabel("phase factor F")
    ax.set_ylabel("weighted path stretch")
    ax.set_title("Path stretch across phase factors")
    ax.legend(ncol=2)
    _save(fig, path)


def corr_figure(rows, corr_rows, path):
    fig, ax = _new_axes()
    patterns = sorted({r["pattern"] for r in rows})
    corr = {c[0]: c[2] for c in corr_rows}
    for pattern in patterns:
        sub = [r for r in rows if r["pattern"] == pattern]
        ax.scatter([r["mean_isl_length_km"] for r in sub], [r["weighted_stretch"] for r in sub],
                   s=14, label=f"{pattern} (r={corr[pattern]:.2f})")
    ax.set_xlabel("mean ISL length (km)")
    ax.set_ylabel("weighted path stretch")
    ax.set_title("ISL length vs path stretch")
    ax.legend(ncol=2)
    _save(fig, path)


def rtt_figure(rtt_rows, path):
    fig, ax = _new_axes()
    patterns = sorted({r[0] for r in rtt_rows})
    for pattern in patterns:
        sub = [(r[1], r[2]) for r in rtt_rows if r[0] == pattern]
        sub.sort()
        ax.plot([d for d, _ in sub], [v for _, v in sub], marker="o", markersize=3, label=pattern)
    ax.set_xlabel("per-hop queuing delay (ms)")
    ax.set_ylabel("mean RTT (ms)")
    ax.set_title("RTT across queuing delays")
    ax.legend(ncol=2)
    _save(fig, path)


def throughput_figure(rows, path):
    fig, ax = _new_axes()
    patterns = sorted({r[0] for r in rows})
    for pattern in patterns:
        sub = [(r[1], r[2], r[3]) for r in rows if r[0] == pattern]
        sub.sort()
        loads = [l for l, _, _ in sub]
        ax.plot(loads, [c for _, c, _ in sub], marker="o", markersize=3, label=f"{pattern} carried")
        ax.plot(loads, [b for _, _, b in sub], linestyle=":", label=f"{pattern} max-flow bound")
    ax.set_xlabel("load (demand count)")
    ax.set_ylabel("throughput (Gbps)")
    ax.set_title("Carried throughput vs offered load")
    ax.legend(ncol=2)
    _save(fig, path)


def optimize_figure(frontier, result, comparison, path):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.5, 4.2))
    plt.rcParams.update(_RC)
    ax1.plot([p.mean_isl_length_km for p in frontier], [p.mean_availability for p in frontier],
             "o-", color="tab:blue", label="Pareto frontier")
    ax1.scatter([result.report.mean_isl_length_km], [result.report.mean_availability],
                color="tab:red", zorder=5, label="selected")
    ax1.set_xlabel("mean ISL length (km)")
    ax1.set_ylabel("mean availability")
    ax1.set_title("Availability / length trade-off")
    ax1.legend()
    labels = [c["structure"] for c in comparison]
    ax2.bar(range(len(labels)), [c["weighted_stretch"] for c in comparison], color="tab:green")
    ax2.set_xticks(range(len(labels)))
    ax2.set_xticklabels(labels, rotation=30, ha="right")
    ax2.set_ylabel("weighted stretch")
    ax2.set_title("Original vs optimized stretch")
    _save(fig, path)


def pareto_figure(candidate_rows, frontier, path):
    fig, ax = _new_axes()
    dominated = [(r[5], r[6]) for r in candidate_rows if not r[8]]
    ax.scatter([x for x, _ in dominated], [y for _, y in dominated],
               s=14, color="0.6", label="dominated")
    ax.plot([p.mean_isl_length_km for p in frontier], [p.mean_availability for p in frontier],
            "o-", color="tab:red", label="frontier")
    ax.set_xlabel("mean ISL length (km)")
    ax.set_ylabel("mean availability")
    ax.set_title("Candidate structures and Pareto frontier")
    ax.legend()
    _save(fig, path)
