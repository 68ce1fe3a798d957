"""Deterministic SVG figures for evaluation reports and parameter sweeps.

Rendering always goes through the Agg backend with a fixed svg.hashsalt and
no embedded creation date, so rerunning the same experiment produces
byte-identical SVG files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_SVG_KW = {"format": "svg", "metadata": {"Date": None}}


def _new_figure():
    plt.rcParams["svg.hashsalt"] = "hinprop"
    return plt.subplots(figsize=(6.0, 4.0))


def plot_accuracy(report, out_path) -> str:
    """Mean accuracy vs seed fraction, one error-bar line per method."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = _new_figure()
    x = [100.0 * f for f in report.fractions]
    for method in report.methods:
        means = [report.mean_accuracy(method, fi)
                 for fi in range(len(report.fractions))]
        stds = [report.std_accuracy(method, fi)
                for fi in range(len(report.fractions))]
        ax.errorbar(x, means, yerr=stds, marker="o", capsize=3, label=method)
    ax.set_xlabel("seed fraction (%)")
    ax.set_ylabel("accuracy (%)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, **_SVG_KW)
    plt.close(fig)
    return str(out_path)


def plot_sweep(sweep, out_path) -> str:
    """Mean accuracy vs swept parameter value, one line per seed fraction."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = _new_figure()
    for fraction in sweep.fractions:
        pts = [(v, acc) for v, f, acc in sweep.rows if f == fraction]
        if not pts:
            continue
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o",
                label=f"{100.0 * fraction:.0f}% seeds")
    ax.set_xlabel(sweep.param)
    ax.set_ylabel("accuracy (%)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, **_SVG_KW)
    plt.close(fig)
    return str(out_path)
