"""Figures for campaign outputs (eigenvalue clouds, count growth).

Rendered with the Agg backend straight to files; nothing here is needed for
the numerical results.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .weylgeom import Disc, Rect, Region, Sector  # noqa: E402


def read_eig_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([complex(float(r["re"]), float(r["im"])) for r in rows])


def _outline(ax, region: Region, **kw):
    if isinstance(region, Disc):
        ax.add_patch(plt.Circle((region.center.real, region.center.imag), region.radius, fill=False, **kw))
    elif isinstance(region, Rect):
        ax.add_patch(
            plt.Rectangle(
                (region.re_lo, region.im_lo), region.re_hi - region.re_lo, region.im_hi - region.im_lo, fill=False, **kw
            )
        )
    elif isinstance(region, Sector):
        b = region.boundary_points()
        ax.plot(b.real, b.imag, **kw)


def eigenvalue_cloud(clouds, regions, path, title=None, xlim=None, ylim=None):
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for z in clouds:
        ax.plot(z.real, z.imag, ".", ms=2, alpha=0.6)
    for reg in regions:
        _outline(ax, reg, color="k", lw=1)
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    if xlim:
        ax.set_xlim(*xlim)
    if ylim:
        ax.set_ylim(*ylim)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def count_growth(summary: dict, path):
    """Log-log plot of sector counts against lambda with the Weyl prediction."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for reg in summary["regions"]:
        key = reg["key"]
        lams = [float(k) for k in reg["lambdas"]]
        preds = [v["prediction"] for v in reg["lambdas"].values()]
        ax.loglog(lams, preds, "k--", lw=1, label=f"{key} Weyl")
        for tr in summary["trials"]:
            per = tr["counts"].get(key, {})
            pts = [(float(k), v) for k, v in per.items() if v]
            if pts:
                x, y = zip(*pts)
                ax.loglog(x, y, ".-", lw=0.6, alpha=0.6)
    ax.set_xlabel("lambda")
    ax.set_ylabel("eigenvalues in sector")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def campaign_figures(summary: dict, out_dir, regions) -> list[str]:
    out = Path(out_dir)
    fig_dir = out / "figures"
    fig_dir.mkdir(parents=True, exist_ok=True)
    clouds = [read_eig_csv(out / t["eigenvalues_file"]) for t in summary["trials"] if t["eigenvalues_file"]]
    paths = []
    if summary["mode"] == "semiclassical":
        allz = np.concatenate(clouds) if clouds else np.zeros(0)
        rmax = max((r.outer_radius for r in regions), default=1.0)
        paths.append(
            eigenvalue_cloud(
                clouds[:4], regions, fig_dir / "eigenvalues.png",
                title="perturbed spectrum (first trials)",
                xlim=(min(-1.5, allz.real.min(initial=0)), 2 * rmax + 1),
            )
        )
    else:
        trust = summary["aggregate"]["trust_radius"]
        lam = max(float(k) for k in summary["regions"][0]["lambdas"])
        sectors = [r.with_lambda(lam) for r in regions if isinstance(r, Sector)]
        lim = min(trust, 1.2 * lam)
        paths.append(
            eigenvalue_cloud(
                clouds[:4], sectors, fig_dir / "eigenvalues.png",
                title="perturbed spectrum near the sectors", xlim=(-0.1 * lim, lim), ylim=(-0.6 * lim, 0.6 * lim),
            )
        )
        paths.append(count_growth(summary, fig_dir / "counts.png"))
    return [str(p) for p in paths]
