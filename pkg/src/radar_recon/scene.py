"""Point-target scene generation and raw FMCW MIMO frame synthesis.

The simulator works in normalised bin units: a target is placed at a
fractional range bin, a fractional Doppler bin and a sine-azimuth ``u``.
Carrier frequency and chirp bandwidth never enter the computation; with
the default 64 m / 128 range bins layout a 0.5 m bin corresponds to a
sweep bandwidth of about 300 MHz (c / 2B) at the 79 GHz carrier.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class RadarParams:
    n_channels: int = 16
    n_sweeps: int = 48
    n_samples: int = 256
    max_range: float = 64.0
    max_velocity: float = 5.8
    fov: float = 100.0
    element_spacing: float = 0.5

    def validate(self):
        if self.n_channels < 2:
            raise ConfigurationError(f"n_channels must be >= 2, got {self.n_channels}")
        if self.n_samples < 8 or self.n_samples % 2:
            raise ConfigurationError(f"n_samples must be even and >= 8, got {self.n_samples}")
        if self.n_sweeps < 2:
            raise ConfigurationError(f"n_sweeps must be >= 2, got {self.n_sweeps}")
        if not self.max_range > 0 or not self.max_velocity > 0:
            raise ConfigurationError("max_range and max_velocity must be positive")
        if not 0 < self.fov < 180:
            raise ConfigurationError(f"fov must lie in (0, 180) degrees, got {self.fov}")
        if self.element_spacing <= 0:
            raise ConfigurationError("element_spacing must be positive")
        return self

    @property
    def sin_half_fov(self) -> float:
        return math.sin(math.radians(self.fov / 2))


@dataclass(frozen=True)
class DerivedConstants:
    range_bin: float
    doppler_bin: float
    n_range_bins: int
    u_grid: np.ndarray = field(repr=False)


def derive_constants(params: RadarParams, n_az: int = 64) -> DerivedConstants:
    params.validate()
    n_range = params.n_samples // 2
    return DerivedConstants(
        range_bin=params.max_range / n_range,
        doppler_bin=2 * params.max_velocity / params.n_sweeps,
        n_range_bins=n_range,
        u_grid=u_grid(n_az),
    )


def u_grid(n_az: int) -> np.ndarray:
    """Sine-azimuth value of each centred beamformer bin, uniform over [-1, 1)."""
    return (np.arange(n_az) - n_az // 2) * (2.0 / n_az)


@dataclass(frozen=True)
class PointTarget:
    range_bin_frac: float
    doppler_bin_frac: float
    sin_azimuth: float
    amplitude: float = 1.0
    phase: float = 0.0

    def check(self, params: RadarParams):
        n_range = params.n_samples // 2
        half = params.n_sweeps / 2
        if not 2 <= self.range_bin_frac <= n_range - 2:
            raise ConfigurationError(
                f"range bin {self.range_bin_frac} outside [2, {n_range - 2}]")
        if not -half + 1 <= self.doppler_bin_frac <= half - 1:
            raise ConfigurationError(
                f"doppler bin {self.doppler_bin_frac} outside [{-half + 1}, {half - 1}]")
        if abs(self.sin_azimuth) > params.sin_half_fov + 1e-12:
            raise ConfigurationError(
                f"sin_azimuth {self.sin_azimuth} outside the field of view")
        if not self.amplitude > 0:
            raise ConfigurationError("target amplitude must be positive")


@dataclass(frozen=True)
class Scene:
    targets: tuple = ()
    noise_sigma: float = 0.0
    seed: int = 0


@dataclass(frozen=True)
class SceneSpec:
    """Ranges that :func:`make_scene` draws from (all inclusive, uniform).

    ``sin_az_max`` narrows the azimuth sector; ``None`` means the full FOV.
    ``noise_sigma`` is a ``(low, high)`` pair so that a dataset can sweep SNR.
    """

    n_targets: tuple = (1, 3)
    amplitude: tuple = (0.5, 2.0)
    noise_sigma: tuple = (0.0, 0.0)
    sin_az_max: float | None = None
    range_bins: tuple | None = None
    doppler_bins: tuple | None = None

    def __post_init__(self):
        for name in ("n_targets", "amplitude", "noise_sigma", "range_bins", "doppler_bins"):
            val = getattr(self, name)
            if isinstance(val, (int, float)):
                val = (val, val)
            if val is not None:
                object.__setattr__(self, name, tuple(val))


def _interval(name, lo, hi, bound_lo=None, bound_hi=None):
    if lo > hi:
        raise ConfigurationError(f"empty interval for {name}: [{lo}, {hi}]")
    if bound_lo is not None and lo < bound_lo - 1e-12:
        raise ConfigurationError(f"{name} lower bound {lo} below {bound_lo}")
    if bound_hi is not None and hi > bound_hi + 1e-12:
        raise ConfigurationError(f"{name} upper bound {hi} above {bound_hi}")


def make_scene(spec: SceneSpec, seed: int, params: RadarParams | None = None) -> Scene:
    params = (params or RadarParams()).validate()
    n_range = params.n_samples // 2
    half = params.n_sweeps / 2
    r_lo, r_hi = spec.range_bins or (2, n_range - 2)
    d_lo, d_hi = spec.doppler_bins or (-half + 1, half - 1)
    u_max = params.sin_half_fov if spec.sin_az_max is None else spec.sin_az_max

    _interval("n_targets", *spec.n_targets, 0)
    _interval("amplitude", *spec.amplitude, 0)
    _interval("noise_sigma", *spec.noise_sigma, 0)
    _interval("range_bins", r_lo, r_hi, 2, n_range - 2)
    _interval("doppler_bins", d_lo, d_hi, -half + 1, half - 1)
    _interval("sin_az_max", 0, u_max, 0, params.sin_half_fov)
    if spec.amplitude[0] <= 0 and spec.n_targets[1] > 0:
        raise ConfigurationError("amplitudes must be strictly positive")

    rng = np.random.default_rng(seed)
    n = int(rng.integers(spec.n_targets[0], spec.n_targets[1] + 1))
    targets = tuple(
        PointTarget(
            range_bin_frac=float(rng.uniform(r_lo, r_hi)),
            doppler_bin_frac=float(rng.uniform(d_lo, d_hi)),
            sin_azimuth=float(rng.uniform(-u_max, u_max)),
            amplitude=float(rng.uniform(*spec.amplitude)),
            phase=float(rng.uniform(-np.pi, np.pi)),
        )
        for _ in range(n)
    )
    sigma = float(rng.uniform(*spec.noise_sigma))
    return Scene(targets=targets, noise_sigma=sigma, seed=seed)


def synth_raw(scene: Scene, params: RadarParams | None = None) -> np.ndarray:
    """Raw real-valued frame of shape (channel, sweep, sample)."""
    params = (params or RadarParams()).validate()
    nc, nm, nk = params.n_channels, params.n_sweeps, params.n_samples
    n = np.arange(nc)[:, None, None]
    m = np.arange(nm)[None, :, None]
    k = np.arange(nk)[None, None, :]
    # channel phase step is 2*pi*d*u; with d = 0.5 wavelength this is pi*u
    spatial = 2 * np.pi * params.element_spacing
    raw = np.zeros((nc, nm, nk))
    for t in scene.targets:
        t.check(params)
        arg = (2 * np.pi * (t.range_bin_frac * k / nk + t.doppler_bin_frac * m / nm)
               + spatial * n * t.sin_azimuth + t.phase)
        raw += t.amplitude * np.cos(arg)
    if scene.noise_sigma > 0:
        rng = np.random.default_rng([scene.seed, 0x5EED])
        raw += rng.normal(0.0, scene.noise_sigma, size=raw.shape)
    return raw
