"""SVG figures.  Output is byte-stable: no date metadata, fixed hash salt."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .beamform import CartesianGrid, beamform, polar_to_cartesian  # noqa: E402
from .scene import RadarParams, u_grid  # noqa: E402

plt.rcParams["svg.hashsalt"] = "radar-recon"


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def bev_image(rd, params: RadarParams | None = None, n_az: int = 64,
              grid: CartesianGrid | None = None, floor_db: float = -40.0):
    """Bird's-eye image in dB: beamform, integrate power over Doppler, map to x/y."""
    params = params or RadarParams()
    power = (np.abs(beamform(rd, n_az, axis=0)) ** 2).sum(axis=2)
    ranges = np.arange(power.shape[1]) * params.max_range / power.shape[1]
    img = polar_to_cartesian(power, u_grid(n_az), ranges, grid, params.fov)
    peak = np.nanmax(img)
    with np.errstate(divide="ignore"):
        db = 10 * np.log10(img / peak) if peak > 0 else np.full_like(img, floor_db)
    return np.maximum(db, floor_db)


def triptych(path, panels, titles, params: RadarParams | None = None,
             grid: CartesianGrid | None = None):
    """Side-by-side bird's-eye images, e.g. input / predicted / label."""
    grid = grid or CartesianGrid()
    fig, axes = plt.subplots(1, len(panels), figsize=(4 * len(panels), 3.6))
    for ax, rd, title in zip(np.atleast_1d(axes), panels, titles):
        ax.imshow(bev_image(rd, params, grid=grid), origin="lower", cmap="viridis",
                  extent=(grid.x_min, grid.x_max, grid.y_min, grid.y_max), aspect="equal")
        ax.set_title(title)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    fig.tight_layout()
    _save(fig, path)


def curves(path, x, series: dict, xlabel: str, ylabel: str, title: str = ""):
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for label, y in series.items():
        ax.plot(x, y, marker="o", ms=3, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)
