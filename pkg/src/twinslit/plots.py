"""Optional matplotlib figure rendering alongside the delimited output.

Figures are a convenience for eyeballing runs; every number they show is
already in the CSV/JSON files.  Rendering is off by default and enabled with
the CLI --plots flag.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_SAVEFIG = dict(dpi=150, metadata={"Software": None})


def _save(fig, path):
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)
    return path


def plot_histograms(hist_right, hist_left, out_dir):
    paths = []
    for hist, name, title in (
        (hist_right, "histogram_right.png", "Right screen"),
        (hist_left, "histogram_left.png", "Left screen"),
    ):
        fig, ax = plt.subplots(figsize=(7, 4))
        widths = hist.bin_edges[1:] - hist.bin_edges[:-1]
        ax.bar(hist.bin_edges[:-1], hist.counts, width=widths, align="edge",
               color="steelblue", edgecolor="none")
        ax.axvline(0.0, color="k", lw=0.8)
        ax.set_xlabel("screen position y")
        ax.set_ylabel("detections per bin")
        ax.set_title(title)
        paths.append(_save(fig, os.path.join(out_dir, name)))
    return paths


def plot_arrivals(arrival_set, out_dir):
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    r, l = arrival_set.right, arrival_set.left
    step = max(1, len(r) // 20000)
    ax.plot(r[::step], l[::step], ",", color="navy", alpha=0.5)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.axvline(0.0, color="k", lw=0.8)
    ax.set_xlabel("right-screen arrival")
    ax.set_ylabel("left-screen arrival")
    label = arrival_set.theory + (
        f" ({arrival_set.source_mode})" if arrival_set.source_mode else ""
    )
    ax.set_title(f"Joint arrivals, {label}")
    return [_save(fig, os.path.join(out_dir, "arrivals.png"))]


def plot_trajectories(trajectories, out_dir):
    fig, ax = plt.subplots(figsize=(7, 5))
    for traj in trajectories:
        ax.plot(traj.times, traj.y1, color="firebrick", lw=0.5, alpha=0.6)
        ax.plot(traj.times, traj.y2, color="steelblue", lw=0.5, alpha=0.6)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("y")
    ax.set_title("Guided trajectories (red: particle 1, blue: particle 2)")
    return [_save(fig, os.path.join(out_dir, "trajectories.png"))]
