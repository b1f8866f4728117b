"""Raw frame -> complex range-Doppler cube.

Windowing plus a real-to-complex FFT over samples, then windowing plus a
complex FFT over sweeps.  Both transforms use unitary scaling so that
energy identities hold exactly (up to the factor 1/2 from dropping the
negative range frequencies of a real signal).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ShapeError

WINDOW_KINDS = ("rectangular", "hann", "hamming")


@dataclass(frozen=True)
class WindowSpec:
    kind: str = "hann"
    axis: str = "sample"

    def __post_init__(self):
        if self.kind not in WINDOW_KINDS:
            raise ConfigurationError(f"unknown window kind {self.kind!r}")
        if self.axis not in ("sample", "sweep"):
            raise ConfigurationError(f"unknown window axis {self.axis!r}")


@dataclass(frozen=True)
class PreprocConfig:
    range_window: str = "hann"
    doppler_window: str = "hann"


def window(kind: str, n: int) -> np.ndarray:
    """Strictly positive window coefficients of length ``n``.

    The Hann window drops its two zero end points (``np.hanning(n + 2)[1:-1]``)
    so that every sample keeps a non-zero weight.
    """
    if kind == "rectangular":
        return np.ones(n)
    if kind == "hann":
        return np.hanning(n + 2)[1:-1]
    if kind == "hamming":
        return np.hamming(n)
    raise ConfigurationError(f"unknown window kind {kind!r}")


def range_fft(raw: np.ndarray, w: WindowSpec = WindowSpec("hann", "sample")) -> np.ndarray:
    """(channel, sweep, sample) real -> (channel, range, sweep) complex."""
    if w.axis != "sample":
        raise ConfigurationError("range_fft needs a window on the sample axis")
    raw = np.asarray(raw)
    if raw.ndim != 3:
        raise ShapeError(f"raw cube must be 3-D (channel, sweep, sample), got shape {raw.shape}")
    n = raw.shape[2]
    if n % 2:
        raise ShapeError(f"sample axis must be even, got {n}")
    spec = np.fft.rfft(raw * window(w.kind, n), axis=2)[:, :, : n // 2] / np.sqrt(n)
    return np.ascontiguousarray(spec.transpose(0, 2, 1))


def doppler_fft(rc: np.ndarray, w: WindowSpec = WindowSpec("hann", "sweep")) -> np.ndarray:
    """(channel, range, sweep) -> centred (channel, range, Doppler)."""
    if w.axis != "sweep":
        raise ConfigurationError("doppler_fft needs a window on the sweep axis")
    rc = np.asarray(rc)
    if rc.ndim != 3:
        raise ShapeError(f"range cube must be 3-D, got shape {rc.shape}")
    n = rc.shape[2]
    spec = np.fft.fft(rc * window(w.kind, n), axis=2) / np.sqrt(n)
    return np.fft.fftshift(spec, axes=2)


def preprocess(raw: np.ndarray, cfg: PreprocConfig | None = None) -> np.ndarray:
    cfg = cfg or PreprocConfig()
    rc = range_fft(raw, WindowSpec(cfg.range_window, "sample"))
    return doppler_fft(rc, WindowSpec(cfg.doppler_window, "sweep"))


def doppler_index(doppler_bin: float, n_sweeps: int) -> float:
    """Centred Doppler index of a (signed) Doppler bin."""
    return n_sweeps // 2 + doppler_bin
