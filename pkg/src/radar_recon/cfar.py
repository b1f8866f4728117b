"""CFAR detection and the occupancy (sparsity) examination.

Detections are made on the full-array beamformer power.  Each coarse
range-Doppler-azimuth cell of the 4-channel array is then classified by how
many full-array detections fall inside it: none, one, or several.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beamform import beamform
from .errors import ConfigurationError

CLASSES = ("empty", "single", "multiple", "sparse")


@dataclass(frozen=True)
class CfarConfig:
    style: str = "cell_averaging_1d_range"
    guard_cells: int = 2
    train_cells: int = 8
    threshold_factor_db: float = 10.0

    def __post_init__(self):
        if self.style not in ("cell_averaging_1d_range", "global_noise_floor"):
            raise ConfigurationError(f"unknown CFAR style {self.style!r}")
        if self.train_cells < 1 or self.guard_cells < 0:
            raise ConfigurationError("need train_cells >= 1 and guard_cells >= 0")
        if not self.threshold_factor_db >= 0:
            raise ConfigurationError("threshold_factor_db must be >= 0")


@dataclass
class CellStats:
    empty_frac: float
    single_frac: float
    multiple_frac: float
    n_cells: int = 0

    @property
    def sparse_frac(self) -> float:
        return self.empty_frac + self.single_frac


def _window_sum(p, lo, hi, axis):
    """Sum of ``p`` over offsets [lo, hi] along ``axis`` (clipped at the edges), and the count."""
    n = p.shape[axis]
    c = np.concatenate([np.zeros_like(np.take(p, [0], axis=axis)), np.cumsum(p, axis=axis)], axis=axis)
    idx = np.arange(n)
    a = np.clip(idx + lo, 0, n)
    b = np.clip(idx + hi + 1, 0, n)
    b = np.maximum(a, b)
    total = np.take(c, b, axis=axis) - np.take(c, a, axis=axis)
    shape = [1] * p.ndim
    shape[axis] = n
    return total, (b - a).reshape(shape)


def noise_estimate(power, cfg: CfarConfig, axis: int = 1):
    """Cell-averaging noise level: mean of the training cells on both sides,
    skipping the guard cells (one-sided at the edges)."""
    g, t = cfg.guard_cells, cfg.train_cells
    if 2 * (g + t) + 1 > power.shape[axis]:
        raise ConfigurationError(
            f"CFAR window ({2 * (g + t) + 1} cells) exceeds axis length {power.shape[axis]}")
    s_lo, n_lo = _window_sum(power, -(g + t), -(g + 1), axis)
    s_hi, n_hi = _window_sum(power, g + 1, g + t, axis)
    return (s_lo + s_hi) / (n_lo + n_hi)


def cfar_detect(power, cfg: CfarConfig = CfarConfig(), axis: int = 1) -> np.ndarray:
    """Boolean detection mask.  ``axis`` is the range axis (azimuth, range, Doppler layout)."""
    power = np.asarray(power, dtype=float)
    if np.any(power < 0):
        raise ConfigurationError("power map must be non-negative")
    scale = 10 ** (cfg.threshold_factor_db / 10)
    if cfg.style == "global_noise_floor":
        noise = np.median(power)
    else:
        noise = noise_estimate(power, cfg, axis)
    with np.errstate(invalid="ignore", over="ignore"):
        return power > noise * scale


def azimuth_peaks(power, axis: int = 0) -> np.ndarray:
    """Cells that are local maxima along the azimuth axis (ties count once, leftmost)."""
    p = np.moveaxis(np.asarray(power, dtype=float), axis, 0)
    left = np.concatenate([np.full_like(p[:1], -np.inf), p[:-1]])
    right = np.concatenate([p[1:], np.full_like(p[:1], -np.inf)])
    return np.moveaxis((p > left) & (p >= right), 0, axis)


def occupancy(fine_mask, coarse_width: int, axis: int = 0) -> CellStats:
    """Classify coarse cells by their number of fine detections.

    ``coarse_width`` fine azimuth bins make up one coarse cell.
    """
    m = np.moveaxis(np.asarray(fine_mask, dtype=bool), axis, 0)
    n_fine = m.shape[0]
    if coarse_width < 1 or n_fine % coarse_width:
        raise ConfigurationError(
            f"{n_fine} fine azimuth bins do not nest into cells of {coarse_width}")
    counts = m.reshape((n_fine // coarse_width, coarse_width) + m.shape[1:]).sum(axis=1)
    total = counts.size
    if total == 0:
        raise ConfigurationError("no cells to classify")
    empty = np.count_nonzero(counts == 0)
    single = np.count_nonzero(counts == 1)
    multiple = total - empty - single
    return CellStats(empty / total, single / total, multiple / total, total)


def _counts(fine_mask, coarse_width):
    n_fine = fine_mask.shape[0]
    c = fine_mask.reshape((n_fine // coarse_width, coarse_width) + fine_mask.shape[1:]).sum(axis=1)
    return np.array([np.count_nonzero(c == 0), np.count_nonzero(c == 1), np.count_nonzero(c >= 2)])


def threshold_sweep(frames, factors, cfg: CfarConfig = CfarConfig(), n_az: int = 64,
                    n_coarse_channels: int = 4, static_halfwidth: int = 1):
    """Occupancy fractions as a function of CFAR threshold.

    ``frames`` are full-array range-Doppler cubes (channel, range, Doppler).
    Returns ``{"static"|"dynamic"|"all": {class: array over factors}}``.  Static
    cells are Doppler bins within ``static_halfwidth`` of zero velocity.
    """
    factors = list(factors)
    if not factors:
        raise ConfigurationError("threshold sweep needs at least one factor")
    frames = list(frames)
    if not frames:
        raise ConfigurationError("threshold sweep needs at least one frame")
    n_ch = frames[0].shape[0]
    coarse_width = n_az // n_coarse_channels
    if n_az % n_coarse_channels:
        raise ConfigurationError("n_az must be a multiple of the coarse channel count")
    n_dop = frames[0].shape[2]
    centre = n_dop // 2
    static = np.zeros(n_dop, dtype=bool)
    static[max(centre - static_halfwidth, 0):centre + static_halfwidth + 1] = True
    if n_ch < n_coarse_channels:
        raise ConfigurationError("full array must have at least as many channels as the coarse array")

    tallies = {r: np.zeros((len(factors), 3)) for r in ("static", "dynamic", "all")}
    for rd in frames:
        power = np.abs(beamform(rd, n_az, axis=0)) ** 2
        noise = (np.median(power) if cfg.style == "global_noise_floor"
                 else noise_estimate(power, cfg, axis=1))
        peaks = azimuth_peaks(power, axis=0)
        for fi, f in enumerate(factors):
            with np.errstate(invalid="ignore", over="ignore"):
                det = (power > noise * 10 ** (f / 10)) & peaks
            cs = _counts(det[:, :, static], coarse_width)
            cd = _counts(det[:, :, ~static], coarse_width)
            tallies["static"][fi] += cs
            tallies["dynamic"][fi] += cd
            tallies["all"][fi] += cs + cd

    curves = {}
    for region, t in tallies.items():
        frac = t / t.sum(axis=1, keepdims=True)
        curves[region] = {"empty": frac[:, 0], "single": frac[:, 1], "multiple": frac[:, 2],
                          "sparse": frac[:, 0] + frac[:, 1]}
    return curves
