"""Sweep figures: metric-vs-sampling-ratio curves rendered to SVG files."""

from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
# pin the SVG id salt and drop the creation date so reruns are byte-identical
matplotlib.rcParams["svg.hashsalt"] = "ebsd-subsample"
import matplotlib.pyplot as plt
import numpy as np

from .maps_io import MapKind, MetricsRecord

_KIND_STYLE = {
    MapKind.BAND_CONTRAST: dict(color="tab:blue", marker="o", label="band contrast"),
    MapKind.IPF: dict(color="tab:orange", marker="s", label="IPF"),
    MapKind.OTHER: dict(color="tab:gray", marker="^", label="other"),
}


def median_curves(
    records: list[MetricsRecord], metric: str
) -> dict[MapKind, tuple[np.ndarray, np.ndarray]]:
    """Per-kind (ratios, median-over-seeds metric) arrays, ratios ascending."""
    grouped = defaultdict(lambda: defaultdict(list))
    for r in records:
        grouped[r.map_kind][r.sampling_ratio].append(getattr(r, metric))
    curves = {}
    for kind, by_ratio in grouped.items():
        ratios = np.array(sorted(by_ratio))
        medians = np.array([np.median(by_ratio[x]) for x in ratios])
        curves[kind] = (ratios, medians)
    return curves


def plot_metric_curves(
    records: list[MetricsRecord], metric: str, ylabel: str, path
) -> None:
    """One polyline per map kind, median over seeds, saved as SVG."""
    curves = median_curves(records, metric)
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for kind in sorted(curves, key=lambda k: k.value):
        ratios, medians = curves[kind]
        finite = np.isfinite(medians)
        ax.plot(ratios[finite], medians[finite], **_KIND_STYLE[kind])
    ax.set_xlabel("sampling ratio")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_sweep_figures(records: list[MetricsRecord], ssim_path, psnr_path) -> None:
    plot_metric_curves(records, "ssim", "SSIM (median over seeds)", ssim_path)
    plot_metric_curves(records, "psnr_db", "PSNR [dB] (median over seeds)", psnr_path)
