"""Two-space training loss: range-Doppler terms plus beamformer terms.

Each space has a reconstruction term (mean squared modulus of the error),
an energy term (smooth L1 on mean amplitudes) and a total-variation term
on the predicted amplitude.  Complex cubes are carried through the
autodiff engine as ``(re, im)`` pairs of Tensors.

Shapes: range-Doppler cubes are ``(N, channel, range, Doppler)``,
beamformer cubes ``(N, azimuth, range, Doppler)``.  A leading batch axis is
added when a 3-D cube is passed.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from .arrays import ChannelSplit, scatter_matrices
from .autodiff import Tensor
from .beamform import beamform_matrix
from .errors import ConfigurationError, ShapeError

TERMS = ("rd_rec", "rd_energy", "rd_tv", "bf_rec", "bf_energy", "bf_tv")


@dataclass(frozen=True)
class LossWeights:
    rd_rec: float = 1.0
    rd_energy: float = 1.0
    rd_tv: float = 1.0
    bf_rec: float = 1.0
    bf_energy: float = 1.0
    bf_tv: float = 1.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not v >= 0:
                raise ConfigurationError(f"loss weight {k} must be >= 0, got {v}")

    @classmethod
    def only(cls, *names, value=1.0) -> "LossWeights":
        return cls(**{t: (value if t in names else 0.0) for t in TERMS})


@dataclass(frozen=True)
class LossOptions:
    """Variants for the points the formulas leave open.

    ``continuous_smooth_l1`` switches the energy penalty to the continuous
    Huber form; ``tv="separable"`` replaces the diagonal neighbour difference
    with range + second-axis differences; ``energy="elementwise"`` applies
    the smooth L1 per cell instead of to the mean amplitude.
    """

    continuous_smooth_l1: bool = False
    tv: str = "diagonal"
    energy: str = "mean_amplitude"
    n_az: int = 64

    def __post_init__(self):
        if self.tv not in ("diagonal", "separable"):
            raise ConfigurationError(f"unknown tv variant {self.tv!r}")
        if self.energy not in ("mean_amplitude", "elementwise"):
            raise ConfigurationError(f"unknown energy variant {self.energy!r}")


@dataclass
class LossBreakdown:
    rd_rec: float = 0.0
    rd_energy: float = 0.0
    rd_tv: float = 0.0
    bf_rec: float = 0.0
    bf_energy: float = 0.0
    bf_tv: float = 0.0
    total: float = 0.0
    tensor: Tensor | None = field(default=None, repr=False, compare=False)

    def terms(self) -> dict:
        return {t: getattr(self, t) for t in TERMS}


def smooth_l1(delta: float, continuous: bool = False) -> float:
    """Scalar energy penalty: ``0.5 d^2`` for ``|d| < 0.5``, else ``|d| - 0.5``."""
    return float(ad.smooth_l1(Tensor(delta), 0.5, continuous).data)


# helpers ---------------------------------------------------------------------

def _pair(x):
    if isinstance(x, tuple):
        re, im = x
        return ad.as_tensor(re), ad.as_tensor(im)
    x = np.asarray(x)
    return Tensor(x.real.copy()), Tensor(x.imag.copy())


def _batched(pair):
    re, im = pair
    if re.ndim == 3:
        return re.reshape((1,) + re.shape), im.reshape((1,) + im.shape)
    if re.ndim != 4:
        raise ShapeError(f"expected a 3-D or 4-D cube, got shape {re.shape}")
    return re, im


def _const_batched(x):
    x = np.asarray(x)
    return x[None] if x.ndim == 3 else x


def _amplitude(x):
    # same arithmetic as the prediction path, so equal inputs give exactly equal amplitudes
    return ad.modulus(Tensor(x.real), Tensor(x.imag))


def _weighted(per_item: Tensor, weights):
    """Reduce an (N, J) term: plain mean, or a weighted sum when ``weights`` is given."""
    if weights is None:
        return per_item.mean()
    return (per_item * Tensor(weights)).sum()


def _energy(p_amp, l_amp, axes, opts):
    if opts.energy == "elementwise":
        return ad.smooth_l1(p_amp - l_amp, 0.5, opts.continuous_smooth_l1).mean(axis=axes)
    e_pred = p_amp.mean(axis=axes)
    e_label = l_amp.mean(axis=axes)
    return ad.smooth_l1(e_pred - Tensor(e_label.data), 0.5, opts.continuous_smooth_l1)


def _tv(amp, ax_a, ax_b, opts):
    """Mean absolute amplitude difference over the (ax_a, ax_b) plane, reduced over both."""
    nd = amp.ndim

    def sl(a_slice, b_slice):
        idx = [slice(None)] * nd
        idx[ax_a], idx[ax_b] = a_slice, b_slice
        return amp[tuple(idx)]

    if opts.tv == "diagonal":
        d = sl(slice(1, None), slice(1, None)) - sl(slice(None, -1), slice(None, -1))
        return ad.tabs(d).mean(axis=(ax_a, ax_b))
    da = sl(slice(1, None), slice(None)) - sl(slice(None, -1), slice(None))
    db = sl(slice(None), slice(1, None)) - sl(slice(None), slice(None, -1))
    return ad.tabs(da).mean(axis=(ax_a, ax_b)) + ad.tabs(db).mean(axis=(ax_a, ax_b))


# per-space terms ------------------------------------------------------------

def rd_terms(pred, label, opts: LossOptions = LossOptions(), weights=None):
    """``(rec, energy, tv)`` Tensors for per-channel range-Doppler terms.

    ``weights`` (N, J) optionally replaces the uniform 1/(N J) average over
    (sample, channel), e.g. to score only masked channels.
    """
    pr, pi = _batched(_pair(pred))
    lab = _const_batched(label)
    if pr.shape != lab.shape:
        raise ShapeError(f"prediction {pr.shape} and label {lab.shape} differ")
    dr, di = pr - Tensor(lab.real), pi - Tensor(lab.imag)
    rec = (ad.square(dr) + ad.square(di)).mean(axis=(2, 3))
    p_amp = ad.modulus(pr, pi)
    energy = _energy(p_amp, _amplitude(lab), (2, 3), opts)
    tv = _tv(p_amp, 2, 3, opts)
    return tuple(_weighted(t, weights) for t in (rec, energy, tv))


def bf_terms(pred_bf, label_bf, opts: LossOptions = LossOptions()):
    """``(rec, energy, tv)`` Tensors for the beamformer-space terms."""
    pr, pi = _batched(_pair(pred_bf))
    lab = _const_batched(label_bf)
    if pr.shape != lab.shape:
        raise ConfigurationError(
            f"beamformer cubes differ in shape {pr.shape} vs {lab.shape}; "
            "were they built with the same settings?")
    dr, di = pr - Tensor(lab.real), pi - Tensor(lab.imag)
    rec = (ad.square(dr) + ad.square(di)).mean()
    p_amp = ad.modulus(pr, pi)
    energy = _energy(p_amp, _amplitude(lab), (2, 3), opts).mean()
    # (N, M, K, L): TV over range (axis 2) and azimuth (axis 1), averaged over N and Doppler
    tv = _tv(p_amp, 2, 1, opts).mean()
    return rec, energy, tv


def _breakdown(values: dict, w: LossWeights) -> LossBreakdown:
    total = None
    for name, t in values.items():
        term = t * getattr(w, name)
        total = term if total is None else total + term
    out = LossBreakdown(tensor=total)
    for name, t in values.items():
        setattr(out, name, float(t.data))
    out.total = float(total.data)
    return out


def rd_loss(pred, label, w: LossWeights = LossWeights(), opts: LossOptions = LossOptions(),
            weights=None) -> LossBreakdown:
    rec, energy, tv = rd_terms(pred, label, opts, weights)
    return _breakdown({"rd_rec": rec, "rd_energy": energy, "rd_tv": tv}, w)


def bf_loss(pred_bf, label_bf, w: LossWeights = LossWeights(),
            opts: LossOptions = LossOptions()) -> LossBreakdown:
    rec, energy, tv = bf_terms(pred_bf, label_bf, opts)
    return _breakdown({"bf_rec": rec, "bf_energy": energy, "bf_tv": tv}, w)


def beamform_pair(pair, n_az: int = 64):
    """Differentiable :func:`beamform` of an (re, im) pair along axis 1."""
    re, im = pair
    b = beamform_matrix(re.shape[1], n_az)
    return (ad.channel_mix(re, b.real) - ad.channel_mix(im, b.imag),
            ad.channel_mix(re, b.imag) + ad.channel_mix(im, b.real))


def _const_bf(pair, n_az):
    """Beamform a label through the same matrix path as the prediction."""
    with ad.no_grad():
        re, im = beamform_pair(pair, n_az)
    return re.data + 1j * im.data


def _assemble(pred, inputs, split: ChannelSplit):
    """Full-array (re, im) Tensors from predicted label channels and fixed inputs."""
    p_in, p_pred = scatter_matrices(split)
    pr, pi = _batched(_pair(pred))
    inp = _const_batched(inputs)
    fixed = np.moveaxis(np.tensordot(p_in, inp, axes=([1], [1])), 0, 1)
    return (ad.channel_mix(pr, p_pred, 1) + Tensor(fixed.real),
            ad.channel_mix(pi, p_pred, 1) + Tensor(fixed.imag))


def total_loss(pred, label, inputs, split: ChannelSplit, w: LossWeights = LossWeights(),
               opts: LossOptions = LossOptions()) -> LossBreakdown:
    """Range-Doppler terms on the predicted channels plus beamformer terms on the
    re-assembled array, compared against the beamformed true array."""
    label = _const_batched(label)
    inputs = _const_batched(inputs)
    rd = rd_terms(pred, label, opts)
    pred_bf = beamform_pair(_assemble(pred, inputs, split), opts.n_az)
    bf = bf_terms(pred_bf, _const_bf(_assemble(label, inputs, split), opts.n_az), opts)
    return _breakdown(dict(zip(TERMS, rd + bf)), w)


def masked_total_loss(out_full, full_label, mask, w: LossWeights = LossWeights(),
                      opts: LossOptions = LossOptions()) -> LossBreakdown:
    """Loss for models that emit the whole array (random missing channels).

    ``mask`` (N, C) is 1 on channels that were hidden from the network; the
    prediction is used there and the measured data elsewhere.  Range-Doppler
    terms average over each sample's masked channels only.
    """
    full_label = _const_batched(full_label)
    mask = np.asarray(mask, dtype=float)
    if mask.ndim == 1:
        mask = mask[None]
    counts = mask.sum(axis=1, keepdims=True)
    if np.any(counts == 0):
        raise ConfigurationError("every sample needs at least one masked channel")
    weights = mask / counts / mask.shape[0]
    rd = rd_terms(out_full, full_label, opts, weights)
    orr, oi = _batched(_pair(out_full))
    m4 = Tensor(mask[:, :, None, None])
    keep = (1.0 - mask)[:, :, None, None] * full_label
    pred_full = (orr * m4 + Tensor(keep.real), oi * m4 + Tensor(keep.imag))
    label_full = (Tensor(full_label.real) * m4 + Tensor(keep.real),
                  Tensor(full_label.imag) * m4 + Tensor(keep.imag))
    bf = bf_terms(beamform_pair(pred_full, opts.n_az), _const_bf(label_full, opts.n_az), opts)
    return _breakdown(dict(zip(TERMS, rd + bf)), w)
