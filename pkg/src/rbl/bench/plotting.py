"""Figures for sweep and convergence output (PNG next to the CSV)."""
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "gabp": dict(marker="o", ls="-"),
    "mfb": dict(marker="", ls="--"),
    "ls": dict(marker="s", ls=":"),
    "wls": dict(marker="^", ls="-."),
}


def plot_sweep(records, path):
    by_family = defaultdict(lambda: defaultdict(list))
    units = {}
    for r in records:
        by_family[r.family][r.estimator].append((r.sigma, r.rmse))
        units[r.family] = r.unit
    families = list(by_family)
    ncols = min(3, len(families))
    nrows = int(np.ceil(len(families) / ncols))
    fig, axes = plt.subplots(nrows, ncols, figsize=(4.2 * ncols, 3.4 * nrows), squeeze=False)
    for ax, fam in zip(axes.flat, families):
        for name, pts in by_family[fam].items():
            pts = sorted(p for p in pts if p[0] > 0 and np.isfinite(p[1]))
            if not pts:
                continue
            x, y = zip(*pts)
            ax.loglog(x, y, label=name, **_STYLE.get(name, {}))
        ax.set_title(fam)
        ax.set_xlabel("range error sigma (m)")
        ax.set_ylabel(f"RMSE ({units[fam]})")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=8)
    for ax in list(axes.flat)[len(families):]:
        ax.set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_convergence(result, path):
    stages = sorted({k[2] for k in result.traces})
    ncols = min(3, len(stages))
    nrows = int(np.ceil(len(stages) / ncols))
    fig, axes = plt.subplots(nrows, ncols, figsize=(4.2 * ncols, 3.4 * nrows), squeeze=False)
    for ax, stage in zip(axes.flat, stages):
        for (sigma, name, st), trace in sorted(result.traces.items()):
            if st != stage:
                continue
            ax.semilogy(np.arange(1, len(trace) + 1), trace, label=f"{name} sigma={sigma:g}")
        ax.set_title(stage)
        ax.set_xlabel("iteration")
        ax.set_ylabel("median error")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=7)
    for ax in list(axes.flat)[len(stages):]:
        ax.set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_runtime(summary, path):
    fig, ax = plt.subplots(figsize=(5, 3.4))
    names = list(summary.median_ms)
    ax.bar(names, [summary.median_ms[n] for n in names], color="0.5")
    ax.set_ylabel("median wall time (ms)")
    ax.set_title(f"M={summary.M}, N={summary.N}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
