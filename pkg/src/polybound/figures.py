"""Figures for bound runs, written to image files with matplotlib's Agg backend."""

from __future__ import annotations

import math
from pathlib import Path

from .driver import IntervalResult


def _series(trace):
    nodes = [t[0] for t in trace]
    bound = [t[1] if math.isfinite(t[1]) else math.nan for t in trace]
    inc = [t[2] if math.isfinite(t[2]) else math.nan for t in trace]
    return nodes, bound, inc


def plot_bound_run(res: IntervalResult, path) -> Path:
    """Branch-and-bound progress of each solve and the final interval.

    The left panel shows, per solve, the best open bound and the incumbent
    against the node count; the right panel draws the interval with the
    objective values of the witnesses.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    fig, (ax, bx) = plt.subplots(1, 2, figsize=(10, 4), gridspec_kw={"width_ratios": [3, 1]})
    runs = [("lower program", res.lower_outcome), ("upper program", res.upper_outcome)]
    runs += [(f"refinement {s.round}", s.outcome) for s in res.refinement_trace]
    for label, out in runs:
        if out is None or not out.trace:
            continue
        nodes, bound, inc = _series(out.trace)
        line = ax.step(nodes, bound, where="post", label=f"{label}: open bound")[0]
        ax.step(nodes, inc, where="post", linestyle="--", color=line.get_color(), label=f"{label}: incumbent")
    ax.set_xlabel("nodes")
    ax.set_ylabel("objective")
    ax.set_title(f"{res.program.name}: search progress")
    if ax.lines:
        ax.legend(fontsize="small")

    bx.set_title(res.verdict)
    if res.lower is not None:
        bx.axhline(res.lower, color="tab:blue", label=f"lower {res.lower:.6g}")
    if res.upper is not None:
        bx.axhline(res.upper, color="tab:red", label=f"upper {res.upper:.6g}")
    if res.lower is not None and res.upper is not None:
        bx.axhspan(res.lower, res.upper, color="tab:gray", alpha=0.2)
    if res.witness_lower is not None:
        bx.plot([0.5], [res.witness_lower.objective], "o", color="tab:blue", label="f(x(w-))")
    bx.set_xticks([])
    if bx.lines:
        bx.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
