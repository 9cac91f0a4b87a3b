"""Figure rendering from experiment outputs.

Three figure kinds:

* ``bands`` - mean relative interval width with a +-1 standard error
  band against the grid (sample size or budget), coverage on a twin axis
  with the nominal level dashed.
* ``rmse_loglog`` - relative RMSE points with the fitted power law; the
  legend carries both the theoretical and the fitted slope.
* ``histogram_overlay`` - studentized pivot histogram at one grid point
  with the standard normal density; the one-sample KS p-value against
  the standard normal is recomputed from the records and annotated.

Rendering is deterministic: a fixed style salt and stripped timestamps
make identical inputs produce identical image bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from scipy import stats

from .io import NoDataError, load_records, load_summary, pivots_at

__all__ = ["FigureSpec", "render"]

FIGURE_KINDS = ("bands", "rmse_loglog", "histogram_overlay")

plt.rcParams["svg.hashsalt"] = "wsaa-plots"


@dataclass(frozen=True)
class FigureSpec:
    records: str
    summary: str
    kind: str
    out: str
    title: str | None = None
    grid_value: float | None = None  # histogram_overlay: which grid point

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; choose from {FIGURE_KINDS}")


def _grid_axis(summary) -> str:
    return "sample size n" if summary["grid_label"] == "n" else "budget"


def _finite_points(summary) -> list[dict]:
    pts = [p for p in summary["points"]
           if math.isfinite(p["rel_rmse"]) and p["n_total"] > p["n_failed"]]
    if not pts:
        raise NoDataError("summary contains no grid point with successful replications")
    return pts


def _render_bands(summary, ax):
    pts = _finite_points(summary)
    x = np.array([p["grid_value"] for p in pts])
    width = np.array([p["mean_rel_width"] for p in pts])
    se = np.array([p["sd_rel_width"] / math.sqrt(p["n_total"] - p["n_failed"]) for p in pts])
    coverage = np.array([p["coverage"] for p in pts])

    ax.fill_between(x, width - se, width + se, alpha=0.25, color="tab:blue",
                    label="relative width (+-1 se)")
    ax.plot(x, width, "o-", color="tab:blue")
    ax.set_xscale("log")
    ax.set_xlabel(_grid_axis(summary))
    ax.set_ylabel("interval width / true value", color="tab:blue")

    twin = ax.twinx()
    twin.plot(x, coverage, "s--", color="tab:red", label="coverage")
    twin.axhline(1.0 - summary["alpha"], color="tab:red", linestyle=":",
                 linewidth=1, label=f"nominal {1.0 - summary['alpha']:.2f}")
    twin.set_ylabel("coverage", color="tab:red")
    twin.set_ylim(0.0, 1.05)
    lines, labels = ax.get_legend_handles_labels()
    lines2, labels2 = twin.get_legend_handles_labels()
    ax.legend(lines + lines2, labels + labels2, loc="lower left", fontsize=8)


def _render_rmse_loglog(summary, ax):
    pts = _finite_points(summary)
    x = np.array([p["grid_value"] for p in pts], dtype=float)
    rmse = np.array([p["rel_rmse"] for p in pts], dtype=float)
    ax.loglog(x, rmse, "o", color="tab:blue", label="relative RMSE")
    slope = summary.get("slope")
    if slope is not None and len(pts) >= 2:
        lx = np.log(x)
        ly = np.log(rmse)
        intercept = ly.mean() - slope * lx.mean()
        ax.loglog(x, np.exp(intercept + slope * lx), "-", color="tab:orange",
                  label=f"fit: slope {slope:.3f}")
    theo = summary.get("theoretical_rate")
    if theo is not None:
        ax.loglog([], [], " ", label=f"theoretical slope {theo:.3f}")
    ax.set_xlabel(_grid_axis(summary))
    ax.set_ylabel("RMSE / true value")
    ax.legend(fontsize=8)


def _render_histogram_overlay(records, summary, ax, grid_value):
    pivots = pivots_at(records, grid_value)
    ks = stats.kstest(pivots, "norm")
    ax.hist(pivots, bins=max(10, min(40, pivots.size // 12)), density=True,
            alpha=0.55, color="tab:blue", label="studentized estimates")
    grid = np.linspace(-4.0, 4.0, 401)
    ax.plot(grid, np.exp(-0.5 * grid**2) / math.sqrt(2.0 * math.pi),
            color="tab:red", label="standard normal")
    ax.axvline(0.0, color="gray", linewidth=0.8, linestyle=":")
    ax.annotate(f"KS p = {ks.pvalue:.3f}", xy=(0.02, 0.95), xycoords="axes fraction",
                fontsize=9, va="top")
    ax.set_xlabel("(estimate - true value) / standard error")
    ax.set_ylabel("density")
    ax.legend(fontsize=8)
    print(f"histogram_overlay: KS statistic {ks.statistic:.4f}, p-value {ks.pvalue:.4f}")
    return float(ks.pvalue)


def render(spec: FigureSpec) -> Path:
    """Render one figure; returns the output path. SVG by default, PNG
    when the output path ends in .png."""
    records = load_records(spec.records)
    summary = load_summary(spec.summary)

    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=150)
    try:
        if spec.kind == "bands":
            _render_bands(summary, ax)
        elif spec.kind == "rmse_loglog":
            _render_rmse_loglog(summary, ax)
        else:
            _render_histogram_overlay(records, summary, ax, spec.grid_value)
        ax.set_title(spec.title or spec.kind.replace("_", " "))
        fig.tight_layout()
        out = Path(spec.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, metadata=_clean_metadata(out))
    finally:
        plt.close(fig)
    return Path(spec.out)


def _clean_metadata(out: Path) -> dict | None:
    # strip timestamps so identical inputs give identical bytes
    if out.suffix.lower() == ".svg":
        return {"Date": None}
    if out.suffix.lower() == ".png":
        return {"Software": "wsaa-plots"}
    return None
