"""Log-log decay figures for convergence traces."""

from __future__ import annotations

import os
import tempfile

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .convlab import ConvergenceTrace  # noqa: E402


def _positive(xs, ys):
    pts = [(x, y) for x, y in zip(xs, ys) if y > 0]
    return [x for x, _ in pts], [y for _, y in pts]


def render_trace(trace: ConvergenceTrace, path: str, title: str = "") -> str:
    """Write a PNG with the commutator bound, empirical norm and difference bound.

    Non-positive values cannot sit on a log axis and are left out.
    """
    ns = [r.n for r in trace.rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=100)
    for values, label, style in (
        ([r.bound_comm for r in trace.rows], "commutator bound", "o-"),
        ([r.empirical_comm for r in trace.rows], "empirical commutator norm", "s--"),
        ([r.bound_diff for r in trace.rows], "distance-to-limit bound", "^:"),
    ):
        x, y = _positive(ns, values)
        if x:
            ax.plot(x, y, style, markersize=3, label=label)
    ax.set_xscale("log")
    if ax.lines:
        ax.set_yscale("log")
        ax.legend(fontsize=8)
    ax.set_xlabel("n")
    ax.set_ylabel("norm")
    slope = "n/a" if trace.slope is None else f"{trace.slope:.3f}"
    ax.set_title(f"{title or trace.label}  (p={trace.p:g}, slope {slope})", fontsize=9)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".png.tmp")
    os.close(fd)
    try:
        fig.savefig(tmp, format="png", metadata={"Software": None})
        os.replace(tmp, path)
    finally:
        plt.close(fig)
        if os.path.exists(tmp):
            os.unlink(tmp)
    return path
