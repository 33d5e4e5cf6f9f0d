"""Figure rendering for the CLI report paths.

matplotlib is imported lazily with the Agg backend so that library users and
--no-plots runs never pay for it.  Every function writes a PNG next to the
corresponding CSV and returns the path.
"""

from __future__ import annotations

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_curves(x, table: dict, path: str) -> str:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(8.0, 5.0))
    styles = {"psi1_density": "-", "psi2_density": "-",
              "|psi_a|^2": "--", "|psi_b|^2": ":"}
    for label, values in table.items():
        ax.plot(x, values, styles.get(label, "-"), label=label, linewidth=1.4)
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.set_xlim(x[0], x[-1])
    ax.legend(frameon=False)
    ax.set_title("screen densities: interfering vs spin-tagged")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_fig1(x, table: dict, path: str) -> str:
    """Two-panel figure: tagged density with erasing-basis weak values."""
    plt = _pyplot()
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(8.0, 7.0), sharex=True)
    top.plot(x, table["psi2_density"], "k-", label="psi2_density", linewidth=1.6)
    top.plot(x, table["wv_plus"], "-", label="wv_plus", linewidth=1.2)
    top.plot(x, table["wv_minus"], "-", label="wv_minus", linewidth=1.2)
    top.set_ylabel("conditional density")
    top.legend(frameon=False)
    top.set_title("erasing basis: fringes split out of a fringeless pattern")
    bottom.plot(x, table["psi1_density"], "k--", label="psi1_density", linewidth=1.2)
    bottom.plot(x, table["wv_up"], "-", label="wv_up", linewidth=1.2)
    bottom.plot(x, table["wv_down"], "-", label="wv_down", linewidth=1.2)
    bottom.set_xlabel("x")
    bottom.set_ylabel("conditional density")
    bottom.legend(frameon=False)
    bottom.set_title("tagging basis: single-slit profiles")
    bottom.set_xlim(-10, 10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_weak_values(x, first_label: str, first, second_label: str, second,
                     reference, path: str) -> str:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(8.0, 5.0))
    ax.plot(x, reference, "k-", label="psi2_density", linewidth=1.6)
    ax.plot(x, first, "-", label=first_label, linewidth=1.2)
    ax.plot(x, second, "-", label=second_label, linewidth=1.2)
    ax.set_xlabel("x")
    ax.set_ylabel("conditional density")
    ax.set_xlim(-10, 10)
    ax.legend(frameon=False)
    ax.set_title("post-selected conditional densities")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_histograms(panels: list, path: str) -> str:
    """One panel per (label, histogram, overlay_x, overlay_density)."""
    plt = _pyplot()
    n = len(panels)
    fig, axes = plt.subplots(n, 1, figsize=(8.0, 2.6 * n), sharex=True)
    if n == 1:
        axes = [axes]
    for ax, (label, hist, overlay_x, overlay_density) in zip(axes, panels):
        ax.stairs(hist.density(), hist.edges, fill=True, alpha=0.45,
                  label=f"{label} (sampled)")
        if overlay_density is not None:
            ax.plot(overlay_x, overlay_density, "k-", linewidth=1.2,
                    label="target density")
        ax.set_ylabel("density")
        ax.set_xlim(-10, 10)
        ax.legend(frameon=False, fontsize=9)
    axes[-1].set_xlabel("x")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_pointer(rows: list, path: str) -> str:
    """Inferred vs reference weak values across the coupling sweep."""
    plt = _pyplot()
    fig, (left, right) = plt.subplots(1, 2, figsize=(10.0, 4.2))
    posts = []
    for row in rows:
        if row["post_selection"] not in posts:
            posts.append(row["post_selection"])
    for post in posts:
        got = [(r["g"], r["inferred_weak_value"], r["reference_weak_value"])
               for r in rows if r["post_selection"] == post and r["g"] > 0]
        gs = [g for g, _, _ in got]
        inferred = [v for _, v, _ in got]
        line, = left.plot(gs, inferred, "o-", label=post)
        left.axhline(got[0][2], color=line.get_color(), linestyle=":",
                     linewidth=0.9)
    left.set_xscale("log")
    left.set_xlabel("coupling g (t_int = 1)")
    left.set_ylabel("inferred weak value")
    left.set_title("pointer readout vs quadrature reference (dotted)")
    left.legend(frameon=False, fontsize=9)
    sweep = sorted({r["g"] for r in rows if r["g"] > 0})
    disturbance = [max(r["disturbance"] for r in rows if r["g"] == g)
                   for g in sweep]
    right.loglog(sweep, np.maximum(disturbance, 1e-18), "s-")
    right.set_xlabel("coupling g (t_int = 1)")
    right.set_ylabel("disturbance")
    right.set_title("measurement back-action")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
