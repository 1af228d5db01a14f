"""Figure rendering for the report path.

Every experiment that writes delimited output can also render a matching
PNG next to it.  Figures are a convenience layer only: the CSV and JSON
files are the machine-readable contract and nothing downstream reads the
images back.
"""

from __future__ import annotations

import math
import os
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _finish(fig, out_dir: str, name: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{name}.png")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_growth(report: dict, out_dir: str, name: str = "orbit_growth") -> str:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    rs = report["ladder"]
    counts = report["counts"]
    pos = [(r, n) for r, n in zip(rs, counts) if n > 0]
    ax1.semilogy([p[0] for p in pos], [p[1] for p in pos], "o-", lw=1)
    h = report["h"]
    r0, n0 = pos[-1]
    ax1.semilogy(
        rs, [n0 * math.exp(h * (r - r0)) for r in rs], "--", lw=1, label=f"slope {h:.3f}"
    )
    ax1.set_xlabel("R")
    ax1.set_ylabel("orbit points")
    ax1.legend(fontsize=8)
    cps = report["checkpoints"]
    ax2.plot(cps, report["checkpoint_normalized"], "s-", lw=1)
    ax2.set_xlabel("R")
    ax2.set_ylabel("exp(-hR) N(R)")
    ax2.set_title(f"stabilization {report['stabilization_statistic']:.3f}", fontsize=9)
    return _finish(fig, out_dir, name)


def plot_exponent_coherence(report: dict, out_dir: str, name: str = "exponents") -> str:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    labels = ["orbit", "poincare", "geodesic"]
    values = [report["h_orbit"], report["h_poincare"], report["h_geodesic_slope"]]
    ax1.bar(labels, values, color=["#4878d0", "#ee854a", "#6acc64"])
    ax1.set_ylabel("growth exponent")
    for label in ("below", "above"):
        prof = report["divergence_profile"][label]
        ax2.plot(prof["cutoffs"], prof["partial_sums"], "o-", lw=1, label=f"s {label} h")
    ax2.set_xlabel("cutoff R")
    ax2.set_ylabel("partial sum")
    ax2.legend(fontsize=8)
    return _finish(fig, out_dir, name)


def plot_geodesic_counts(report: dict, out_dir: str, name: str = "geodesic_count") -> str:
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    rows = report["table"]
    ax.plot([r["R"] for r in rows], [r["normalized"] for r in rows], "o-", lw=1)
    ax.axhline(1.0, color="grey", lw=0.8, ls="--")
    ax.set_xlabel("length R")
    ax.set_ylabel("h R exp(-hR) n(R)")
    ax.set_title(f"normalized slope {report['normalized_slope']:.3f}", fontsize=9)
    return _finish(fig, out_dir, name)


def plot_arc_measure(arcs, masses, out_dir: str, name: str = "arc_measure") -> str:
    fig, ax = plt.subplots(figsize=(6.5, 3.2))
    from .circle import angle_of

    centers = [angle_of(a.midpoint()) for a in arcs]
    ax.bar(centers, masses, width=2 * math.pi / max(8, len(arcs)) * 0.8)
    ax.set_xlabel("boundary angle")
    ax.set_ylabel("arc mass")
    return _finish(fig, out_dir, name)


def plot_conformality(devs_by_offset: dict, out_dir: str, name: str = "conformality") -> str:
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    offsets = sorted(devs_by_offset, reverse=True)
    ax.plot(offsets, [devs_by_offset[o] for o in offsets], "o-", lw=1)
    ax.invert_xaxis()
    ax.set_xlabel("s - h")
    ax.set_ylabel("worst arc deviation")
    return _finish(fig, out_dir, name)


def plot_grid_heatmap(grid, out_dir: str, name: str = "bm_grid") -> str:
    import numpy as np

    fig, ax = plt.subplots(figsize=(4.6, 4.0))
    data = np.array(grid.weights)
    mask = np.array(grid.masked)
    shown = np.where(mask, np.nan, data)
    im = ax.imshow(shown, origin="lower", cmap="viridis")
    fig.colorbar(im, ax=ax, shrink=0.8)
    ax.set_xlabel("forward arc")
    ax.set_ylabel("backward arc")
    return _finish(fig, out_dir, name)


def plot_correlations(rows, out_dir: str, name: str = "mixing") -> str:
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ts = [r.t for r in rows]
    ax.errorbar(ts, [r.correlation for r in rows], yerr=[r.stderr for r in rows], fmt="o-", lw=1)
    if rows:
        ax.axhline(rows[0].product, color="grey", ls="--", lw=0.8, label="product")
    ax.set_xlabel("t")
    ax.set_ylabel("C(t)")
    ax.legend(fontsize=8)
    return _finish(fig, out_dir, name)


def plot_equidistribution(report: dict, out_dir: str, name: str = "equidistribution") -> str:
    import numpy as np

    fig, ax = plt.subplots(figsize=(4.8, 4.0))
    n = report["arc_count"]
    obs = np.zeros((n, n))
    mod = np.zeros((n, n))
    for cell in report["cells"]:
        obs[cell["row"], cell["col"]] = cell["observed"]
        mod[cell["row"], cell["col"]] = cell["model"]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mod > 0, obs / mod, np.nan)
    im = ax.imshow(ratio, origin="lower", cmap="coolwarm", vmin=0.5, vmax=1.5)
    fig.colorbar(im, ax=ax, shrink=0.8)
    ax.set_title(f"worst deviation {report['worst_deviation']:.3f}", fontsize=9)
    return _finish(fig, out_dir, name)


def plot_limit_set(samples: Sequence, out_dir: str, name: str = "limit_set") -> str:
    fig, ax = plt.subplots(figsize=(4.6, 4.0))
    xs = [float(v[0]) for v in samples]
    ys = [float(v[1]) for v in samples]
    ax.scatter(xs, ys, s=8, alpha=0.7)
    ax.set_xlabel("first weight coordinate")
    ax.set_ylabel("second weight coordinate")
    ax.set_title("projective limit directions", fontsize=9)
    return _finish(fig, out_dir, name)


def plot_product_ratio(report: dict, out_dir: str, name: str = "product_ratio") -> str:
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    rows = report["rows"]
    ax.plot([r["R"] for r in rows], [r["ratio"] for r in rows], "o-", lw=1)
    ax.axhline(1.0, color="grey", ls="--", lw=0.8)
    ax.set_xlabel("R")
    ax.set_ylabel("four-point count ratio")
    return _finish(fig, out_dir, name)
