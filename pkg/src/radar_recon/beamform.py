"""FFT beamforming over the channel axis and related measurements."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, MeasurementError
from .scene import u_grid


def beamform(rd: np.ndarray, n_az: int = 64, axis: int = -3) -> np.ndarray:
    """Zero-padded, unitary, centred DFT over the channel axis.

    A cube of shape (channel, range, Doppler) becomes (azimuth, range, Doppler);
    azimuth bin ``n_az // 2`` is broadside (u = 0).
    """
    n_ch = rd.shape[axis]
    if n_az < n_ch:
        raise ConfigurationError(f"n_az={n_az} smaller than the {n_ch} channels")
    if n_az & (n_az - 1):
        raise ConfigurationError(f"n_az must be a power of two, got {n_az}")
    spec = np.fft.fft(rd, n=n_az, axis=axis) / np.sqrt(n_az)
    return np.fft.fftshift(spec, axes=axis)


def beamform_matrix(n_channels: int, n_az: int = 64) -> np.ndarray:
    """Complex (n_az, n_channels) matrix equal to :func:`beamform` along the channel axis."""
    return beamform(np.eye(n_channels, dtype=complex), n_az, axis=0)


def nci(rd: np.ndarray, axis: int = -3) -> np.ndarray:
    """Non-coherent integration: channel-summed power per range-Doppler cell."""
    return np.sum(np.abs(rd) ** 2, axis=axis)


def beamwidth(pattern: np.ndarray, u: np.ndarray, level_db: float = -3.0) -> float:
    """Width in u of the contiguous region around the peak above ``max - |level_db|``.

    ``pattern`` is a power pattern (linear units).  Crossings are located by
    linear interpolation between grid points.
    """
    p = np.asarray(pattern, dtype=float)
    u = np.asarray(u, dtype=float)
    i = int(np.argmax(p))
    peak = p[i]
    if peak <= 0 or np.count_nonzero(np.isclose(p, peak, rtol=1e-12, atol=0)) > 1:
        raise MeasurementError("pattern has no unique global maximum")
    thr = peak * 10 ** (-abs(level_db) / 10)

    def crossing(step):
        j = i
        while 0 <= j + step < len(p):
            if p[j + step] < thr:
                a, b = p[j], p[j + step]
                frac = (a - thr) / (a - b)
                return u[j] + frac * (u[j + step] - u[j])
            j += step
        raise MeasurementError(f"no {level_db} dB crossing found on the pattern")

    return float(crossing(1) - crossing(-1))


def array_pattern(n_channels: int, n_az: int = 4096, u0: float = 0.0):
    """Power pattern of a uniformly weighted ULA steered to ``u0`` (half-wavelength spacing)."""
    x = np.exp(1j * np.pi * np.arange(n_channels) * u0)[:, None, None]
    p = np.abs(beamform(x, n_az, axis=0)[:, 0, 0]) ** 2
    return p, u_grid(n_az)


@dataclass(frozen=True)
class CartesianGrid:
    x_min: float = -40.0
    x_max: float = 40.0
    nx: int = 161
    y_min: float = 0.0
    y_max: float = 64.0
    ny: int = 129

    @property
    def x(self):
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def y(self):
        return np.linspace(self.y_min, self.y_max, self.ny)


def polar_to_cartesian(slice_: np.ndarray, u: np.ndarray, ranges: np.ndarray,
                       grid: CartesianGrid | None = None, fov: float = 100.0,
                       sentinel: float = np.nan) -> np.ndarray:
    """Nearest-neighbour resampling of an (azimuth, range) map onto an (y, x) image.

    Cells outside the field of view or beyond the last range bin get ``sentinel``.
    """
    grid = grid or CartesianGrid()
    if grid.nx < 1 or grid.ny < 1:
        raise ConfigurationError("cartesian grid is empty")
    slice_ = np.asarray(slice_)
    if slice_.shape != (len(u), len(ranges)):
        raise ConfigurationError(
            f"slice shape {slice_.shape} does not match ({len(u)}, {len(ranges)})")
    xx, yy = np.meshgrid(grid.x, grid.y)
    r = np.hypot(xx, yy)
    with np.errstate(invalid="ignore", divide="ignore"):
        uu = np.where(r > 0, xx / r, 0.0)
    du = u[1] - u[0]
    dr = ranges[1] - ranges[0]
    iu = np.rint((uu - u[0]) / du).astype(int)
    ir = np.rint((r - ranges[0]) / dr).astype(int)
    inside = ((np.abs(uu) <= np.sin(np.radians(fov / 2))) & (yy >= 0)
              & (iu >= 0) & (iu < len(u)) & (ir >= 0) & (ir < len(ranges)))
    img = np.full(r.shape, sentinel, dtype=float)
    img[inside] = slice_[iu[inside], ir[inside]]
    return img
