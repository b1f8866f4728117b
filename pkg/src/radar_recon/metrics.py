"""Evaluation metrics (relative L1, PSNR) and the cubic-interpolation baseline."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .arrays import ChannelSplit
from .errors import ConfigurationError, ShapeError, UndefinedMetricError, UnsupportedExtrapolationError

SPACES = ("rd", "bf")


@dataclass
class MetricsReport:
    rd_l1: float
    rd_psnr_db: float
    bf_l1: float
    bf_psnr_db: float
    n_frames: int

    def as_dict(self):
        return asdict(self)


def _frames(pred, label):
    pred, label = np.asarray(pred), np.asarray(label)
    if pred.shape != label.shape:
        raise ShapeError(f"prediction {pred.shape} and label {label.shape} differ")
    if pred.ndim == 3:
        pred, label = pred[None], label[None]
    if pred.ndim != 4:
        raise ShapeError(f"expected 3-D or 4-D cubes, got {pred.shape}")
    return pred, label


def l1_metric(pred, label, space: str = "rd") -> float:
    """Mean elementwise ``|pred - label| / |label|``.

    The denominator is floored at ``1e-12 * max|label|`` of the frame.  In
    ``rd`` space the ratio is averaged per channel and then over channels and
    frames; in ``bf`` space over each whole frame, then over frames.
    """
    if space not in SPACES:
        raise ConfigurationError(f"unknown space {space!r}")
    pred, label = _frames(pred, label)
    mag = np.abs(label)
    peak = mag.max(axis=(1, 2, 3), keepdims=True)
    if np.any(peak == 0):
        raise UndefinedMetricError("L1 metric undefined for an all-zero label frame")
    ratio = np.abs(pred - label) / np.maximum(mag, 1e-12 * peak)
    per = ratio.mean(axis=(2, 3)) if space == "rd" else ratio.mean(axis=(1, 2, 3))
    return float(per.mean())


def psnr(pred, label, space: str = "rd") -> float:
    """``10 log10(max|label|^2 / MSE)`` in dB.

    Per channel in ``rd`` space, per frame in ``bf`` space; zero-error items
    are infinite and left out of the average (``inf`` if all are).
    """
    if space not in SPACES:
        raise ConfigurationError(f"unknown space {space!r}")
    pred, label = _frames(pred, label)
    err = np.abs(pred - label) ** 2
    axes = (2, 3) if space == "rd" else (1, 2, 3)
    mse = err.mean(axis=axes)
    peak = (np.abs(label) ** 2).max(axis=axes)
    finite = mse > 0
    if not np.any(finite):
        return float("inf")
    if np.any(peak[finite] == 0):
        raise UndefinedMetricError("PSNR undefined for an all-zero label")
    return float(np.mean(10 * np.log10(peak[finite] / mse[finite])))


# cubic-convolution baseline -----------------------------------------------------

def _quad_slope(xa, xb, xc, fa, fb, fc, at):
    """Derivative at ``at`` of the parabola through three samples."""
    return (fa * (2 * at - xb - xc) / ((xa - xb) * (xa - xc))
            + fb * (2 * at - xa - xc) / ((xb - xa) * (xb - xc))
            + fc * (2 * at - xa - xb) / ((xc - xa) * (xc - xb)))


def catmull_rom(x, f, targets):
    """Cubic Hermite interpolation with Catmull-Rom tangents along axis 0 of ``f``.

    On a uniform grid this equals Keys' cubic convolution with a = -0.5,
    including Keys' end condition (tangent from the parabola through the
    three end samples).  Non-uniform grids use the same parabola slopes.
    Raises for targets outside ``[x[0], x[-1]]``.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f)
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    n = len(x)
    if n < 3:
        raise ConfigurationError("cubic interpolation needs at least 3 samples")
    if np.any(np.diff(x) <= 0):
        raise ConfigurationError("sample positions must be strictly increasing")
    if np.any(targets < x[0]) or np.any(targets > x[-1]):
        raise UnsupportedExtrapolationError(
            f"targets {targets.tolist()} fall outside the input span [{x[0]}, {x[-1]}]")

    slopes = np.empty_like(f, dtype=np.result_type(f, float))
    for i in range(n):
        a, b, c = (0, 1, 2) if i == 0 else ((n - 3, n - 2, n - 1) if i == n - 1 else (i - 1, i, i + 1))
        slopes[i] = _quad_slope(x[a], x[b], x[c], f[a], f[b], f[c], x[i])

    j = np.clip(np.searchsorted(x, targets, side="right") - 1, 0, n - 2)
    h = x[j + 1] - x[j]
    s = (targets - x[j]) / h
    shape = (-1,) + (1,) * (f.ndim - 1)
    s, h = s.reshape(shape), h.reshape(shape)
    h00 = 2 * s ** 3 - 3 * s ** 2 + 1
    h10 = s ** 3 - 2 * s ** 2 + s
    h01 = -2 * s ** 3 + 3 * s ** 2
    h11 = s ** 3 - s ** 2
    return h00 * f[j] + h10 * h * slopes[j] + h01 * f[j + 1] + h11 * h * slopes[j + 1]


def bicubic_channels(input_rd, split: ChannelSplit, axis: int = 0) -> np.ndarray:
    """Estimate the label channels from the input channels by cubic interpolation
    along the array axis, independently for every range-Doppler cell.

    Real and imaginary parts are interpolated independently (the operation is
    linear, so this is the same as interpolating the complex values).
    """
    if split.kind == "super_resolution":
        raise UnsupportedExtrapolationError(
            "super-resolution labels lie outside the input aperture; cubic "
            "interpolation cannot estimate edge channels")
    x = np.asarray(split.input_idx, dtype=float)
    moved = np.moveaxis(np.asarray(input_rd), axis, 0)
    if moved.shape[0] != len(x):
        raise ShapeError(f"got {moved.shape[0]} input channels, split has {len(x)}")
    est = catmull_rom(x, moved.real, split.label_idx) + 1j * catmull_rom(x, moved.imag, split.label_idx)
    return np.moveaxis(est, 0, axis)
