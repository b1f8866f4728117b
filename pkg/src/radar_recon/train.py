"""Self-supervised training, evaluation and the experiment harnesses."""
from __future__ import annotations

import copy
import csv
import io
import logging
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from .arrays import ChannelSplit, make_split, reassemble
from .autodiff import Tensor
from .beamform import beamform
from .errors import ConfigurationError, NumericFault
from .losses import TERMS, LossOptions, LossWeights, masked_total_loss, total_loss
from .metrics import MetricsReport, bicubic_channels, l1_metric, psnr
from .model import Model, ModelConfig, build_model, save_checkpoint
from .preproc import PreprocConfig, preprocess
from .scene import RadarParams, SceneSpec, make_scene, synth_raw

log = logging.getLogger(__name__)

LR_START = 3.141e-4
LR_END = 3.141e-7


# data --------------------------------------------------------------------------

@dataclass
class Dataset:
    frames: np.ndarray  # (N, channel, range, Doppler) complex
    seeds: tuple = ()

    def __len__(self):
        return len(self.frames)

    def subset(self, idx):
        idx = list(idx)
        return Dataset(self.frames[idx], tuple(self.seeds[i] for i in idx) if self.seeds else ())


def make_dataset(spec: SceneSpec, seeds, params: RadarParams | None = None,
                 preproc: PreprocConfig | None = None) -> Dataset:
    params = params or RadarParams()
    seeds = tuple(int(s) for s in seeds)
    frames = np.stack([preprocess(synth_raw(make_scene(spec, s, params), params), preproc)
                       for s in seeds])
    return Dataset(frames, seeds)


# schedule and optimiser --------------------------------------------------------------

def cosine_lr(step: int, total_steps: int, lr_start: float = LR_START,
              lr_end: float = LR_END) -> float:
    if total_steps <= 0:
        raise ConfigurationError("total_steps must be positive")
    if not 0 <= step <= total_steps:
        raise ConfigurationError(f"step {step} outside [0, {total_steps}]")
    return lr_end + 0.5 * (lr_start - lr_end) * (1 + math.cos(math.pi * step / total_steps))


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState, lr: float):
    """Bias-corrected Adam update, in place on ``params`` (name -> Tensor)."""
    for name, g in grads.items():
        if g is not None and not np.all(np.isfinite(g)):
            raise NumericFault(f"non-finite gradient for {name!r} at optimiser step {state.step + 1}")
    state.step += 1
    t = state.step
    c1 = 1 - state.beta1 ** t
    c2 = 1 - state.beta2 ** t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p.data)
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m *= state.beta1
        m += (1 - state.beta1) * g
        v *= state.beta2
        v += (1 - state.beta2) * g * g
        p.data -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


# training ---------------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 8
    lr_start: float = LR_START
    lr_end: float = LR_END
    epochs: int = 30
    seed: int = 0
    weights: LossWeights = LossWeights()
    loss_options: LossOptions = LossOptions()
    split_kind: str = "sparse_array"
    n_input: int = 4
    k_range: tuple = (1, 1)
    patience: int = 5

    def validate(self):
        if not self.lr_start >= self.lr_end > 0:
            raise ConfigurationError("need lr_start >= lr_end > 0")
        if self.batch_size < 1 or self.epochs < 1:
            raise ConfigurationError("batch_size and epochs must be >= 1")
        return self


@dataclass
class TrainHistory:
    steps: list = field(default_factory=list)
    epochs: list = field(default_factory=list)
    best_epoch: int = -1

    def log_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "lr", *TERMS, "total"])
        for r in self.steps:
            w.writerow([r["step"], repr(r["lr"])] + [repr(r[t]) for t in TERMS] + [repr(r["total"])])
        return buf.getvalue()


def model_config_for(split_kind: str, n_total: int = 16, n_input: int = 4, **kw) -> ModelConfig:
    """Fixed splits map inputs -> labels; random-missing models see and emit the whole array."""
    if split_kind == "random_missing":
        return ModelConfig(n_total, n_total, **kw)
    return ModelConfig(n_input, n_total - n_input, **kw)


def _planes(x):
    return np.concatenate([x.real, x.imag], axis=1)


def _scale(x):
    s = np.abs(x).max(axis=(1, 2, 3), keepdims=True)
    return np.where(s > 0, s, 1.0)


def _fixed_batch(frames, split: ChannelSplit):
    inp = frames[:, list(split.input_idx)]
    lab = frames[:, list(split.label_idx)]
    s = _scale(inp)
    return inp / s, lab / s, s


def _random_masks(rng, n, n_total, k_range):
    masks = np.zeros((n, n_total))
    for i in range(n):
        k = int(rng.integers(k_range[0], k_range[1] + 1))
        masks[i, rng.choice(n_total, size=k, replace=False)] = 1.0
    return masks


def _masked_batch(frames, masks):
    keep = (1.0 - masks)[:, :, None, None]
    visible = frames * keep
    s = _scale(visible)
    return visible / s, frames / s, s


def batch_loss(model: Model, frames, cfg: TrainConfig, split=None, masks=None):
    """Loss of ``model`` on a batch of full-array frames (normalised per frame)."""
    n_out = model.config.n_out_channels
    if cfg.split_kind == "random_missing":
        visible, full, _ = _masked_batch(frames, masks)
        out = model(Tensor(_planes(visible)))
        return masked_total_loss((out[:, :n_out], out[:, n_out:]), full, masks,
                                 cfg.weights, cfg.loss_options)
    inp, lab, _ = _fixed_batch(frames, split)
    out = model(Tensor(_planes(inp)))
    return total_loss((out[:, :n_out], out[:, n_out:]), lab, inp, split,
                      cfg.weights, cfg.loss_options)


def train(dataset: Dataset, model: Model, cfg: TrainConfig, val: Dataset | None = None,
          checkpoint_dir=None, eval_k: int = 1):
    """Train ``model`` in place; return the best-validation copy and the history.

    Each optimiser step draws a batch, splits it into inputs and labels,
    runs the network, evaluates the two-space loss and applies Adam.  The loss
    logged for step t is computed with the parameters before update t.
    """
    cfg.validate()
    n_total = dataset.frames.shape[1]
    split = None
    if cfg.split_kind != "random_missing":
        split = make_split(cfg.split_kind, n_total, cfg.n_input)
    rng = np.random.default_rng(cfg.seed)
    n = len(dataset)
    steps_per_epoch = math.ceil(n / cfg.batch_size)
    total_steps = steps_per_epoch * cfg.epochs
    state = AdamState()
    hist = TrainHistory()
    best, best_score, stale = None, np.inf, 0
    if checkpoint_dir is not None:
        os.makedirs(checkpoint_dir, exist_ok=True)

    step = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for b in range(steps_per_epoch):
            idx = order[b * cfg.batch_size:(b + 1) * cfg.batch_size]
            frames = dataset.frames[idx]
            masks = None
            if cfg.split_kind == "random_missing":
                masks = _random_masks(rng, len(idx), n_total, cfg.k_range)
            lr = cosine_lr(step, total_steps, cfg.lr_start, cfg.lr_end)
            model.zero_grad()
            try:
                br = batch_loss(model, frames, cfg, split, masks)
                if br.tensor is not None and br.tensor.requires_grad:
                    br.tensor.backward()
                adam_step(model.params, {k: p.grad for k, p in model.params.items()}, state, lr)
            except NumericFault as exc:
                raise NumericFault(f"epoch {epoch}, step {step}: {exc}; "
                                   f"last good checkpoint kept in {checkpoint_dir}") from exc
            hist.steps.append({"step": step, "lr": lr, **br.terms(), "total": br.total})
            step += 1

        record = {"epoch": epoch}
        if val is not None and len(val):
            rep = evaluate(model, val, cfg.split_kind, n_input=cfg.n_input, k=eval_k,
                           n_az=cfg.loss_options.n_az, seed=cfg.seed)
            record.update(rep.as_dict())
            score = rep.bf_l1
        else:
            score = hist.steps[-1]["total"]
        hist.epochs.append(record)
        if checkpoint_dir is not None:
            save_checkpoint(model, os.path.join(checkpoint_dir, f"epoch_{epoch:03d}.ckpt"))
        if score < best_score:
            best_score, stale, hist.best_epoch = score, 0, epoch
            best = copy.deepcopy(model)
        else:
            stale += 1
        log.info("epoch %d  loss %.5g  score %.5g", epoch, hist.steps[-1]["total"], score)
        if stale >= cfg.patience:
            break
    return best, hist


# evaluation ----------------------------------------------------------------

def model_predictor(model: Model):
    """Predictor returning label-channel estimates for one frame.

    Signature of every predictor: ``predict(inputs, split, full) -> labels``,
    with complex cubes of shape (channel, range, Doppler).
    """
    n_out = model.config.n_out_channels

    def predict(inputs, split, full=None):
        with ad.no_grad():
            if split.kind == "random_missing":
                visible = np.zeros((split.n_total,) + inputs.shape[1:], dtype=complex)
                visible[list(split.input_idx)] = inputs
                v, _, s = _masked_batch(visible[None], np.zeros((1, split.n_total)))
                out = model(Tensor(_planes(v))).data[0]
                pred = (out[:n_out] + 1j * out[n_out:]) * s[0]
                return pred[list(split.label_idx)]
            s = _scale(inputs[None])[0]
            out = model(Tensor(_planes(inputs[None] / s))).data[0]
            return (out[:n_out] + 1j * out[n_out:]) * s

    return predict


def oracle_predictor(inputs, split, full):
    return full[list(split.label_idx)]


def zero_predictor(inputs, split, full):
    return np.zeros((len(split.label_idx),) + inputs.shape[1:], dtype=complex)


def bicubic_predictor(inputs, split, full=None):
    return bicubic_channels(inputs, split)


def eval_splits(kind: str, n_frames: int, n_total: int = 16, n_input: int = 4, k: int = 1,
                seed: int = 0, interior_only: bool = False):
    """One split per evaluation frame; random masks are seeded per frame."""
    if kind != "random_missing":
        s = make_split(kind, n_total, n_input)
        return [s] * n_frames
    out = []
    for i in range(n_frames):
        sub = 10_000 * (seed + 1) + 100 * k + i
        if interior_only:
            rng = np.random.default_rng(sub)
            masked = set((1 + rng.choice(n_total - 2, size=k, replace=False)).tolist())
            inp = tuple(c for c in range(n_total) if c not in masked)
            out.append(ChannelSplit("random_missing", inp, tuple(sorted(masked)), sub))
        else:
            out.append(make_split("random_missing", n_total, n_total - k, sub))
    return out


def evaluate(model_or_predictor, dataset: Dataset, split_kind: str = "sparse_array",
             n_input: int = 4, k: int = 1, n_az: int = 64, seed: int = 0,
             splits=None) -> MetricsReport:
    """Metrics averaged over frames: range-Doppler on the predicted channels,
    beamformer on the re-assembled array against the beamformed true array."""
    predict = (model_predictor(model_or_predictor) if isinstance(model_or_predictor, Model)
               else model_or_predictor)
    n_total = dataset.frames.shape[1]
    if splits is None:
        splits = eval_splits(split_kind, len(dataset), n_total, n_input, k, seed)
    vals = {"rd_l1": [], "rd_psnr_db": [], "bf_l1": [], "bf_psnr_db": []}
    for full, split in zip(dataset.frames, splits):
        inputs = full[list(split.input_idx)]
        labels = full[list(split.label_idx)]
        pred = predict(inputs, split, full)
        vals["rd_l1"].append(l1_metric(pred, labels, "rd"))
        vals["rd_psnr_db"].append(psnr(pred, labels, "rd"))
        bf_pred = beamform(reassemble(inputs, pred, split), n_az, axis=0)
        bf_true = beamform(full, n_az, axis=0)
        vals["bf_l1"].append(l1_metric(bf_pred, bf_true, "bf"))
        vals["bf_psnr_db"].append(psnr(bf_pred, bf_true, "bf"))

    def avg(xs):
        xs = np.asarray(xs)
        fin = xs[np.isfinite(xs)]
        return float(fin.mean()) if fin.size else float("inf")

    return MetricsReport(avg(vals["rd_l1"]), avg(vals["rd_psnr_db"]),
                         avg(vals["bf_l1"]), avg(vals["bf_psnr_db"]), len(dataset))


# harnesses ------------------------------------------------------------------

ABLATION_ROWS = (
    ("L_rd_rec", ("rd_rec",)),
    ("L_rd_rec + L_rd_energy", ("rd_rec", "rd_energy")),
    ("L_rd", ("rd_rec", "rd_energy", "rd_tv")),
    ("L_rd + L_bf_rec", ("rd_rec", "rd_energy", "rd_tv", "bf_rec")),
    ("L_rd + L_bf_rec + L_bf_energy", ("rd_rec", "rd_energy", "rd_tv", "bf_rec", "bf_energy")),
    ("L_rd + L_bf", TERMS),
)


def ablation_weights(base: LossWeights, terms) -> LossWeights:
    return LossWeights(**{t: (getattr(base, t) if t in terms else 0.0) for t in TERMS})


def ablate(train_set: Dataset, val_set: Dataset, cfg: TrainConfig, model_cfg: ModelConfig,
           model_seed: int = 0):
    """Train one model per cumulative loss-term set; every row shares all seeds."""
    rows = []
    for label, terms in ABLATION_ROWS:
        c = replace(cfg, weights=ablation_weights(cfg.weights, terms))
        model = build_model(model_cfg, model_seed)
        best, _ = train(train_set, model, c, val_set)
        rep = evaluate(best, val_set, c.split_kind, n_input=c.n_input,
                       n_az=c.loss_options.n_az, seed=c.seed)
        rows.append({"loss": label, **rep.as_dict()})
    return rows


def missing_channel_sweep(model_or_predictor, dataset: Dataset, k_max: int = 8,
                          n_az: int = 64, seed: int = 0):
    """Metrics against the number of randomly masked channels, k = 1..k_max."""
    n_total = dataset.frames.shape[1]
    if not 1 <= k_max < n_total:
        raise ConfigurationError(f"k_max must lie in [1, {n_total - 1}], got {k_max}")
    curves = {"k": [], "rd_l1": [], "rd_psnr_db": [], "bf_l1": [], "bf_psnr_db": [],
              "masked": []}
    for k in range(1, k_max + 1):
        splits = eval_splits("random_missing", len(dataset), n_total, k=k, seed=seed)
        rep = evaluate(model_or_predictor, dataset, "random_missing", k=k, n_az=n_az,
                       seed=seed, splits=splits)
        curves["k"].append(k)
        for key in ("rd_l1", "rd_psnr_db", "bf_l1", "bf_psnr_db"):
            curves[key].append(getattr(rep, key))
        curves["masked"].append(sorted({c for s in splits for c in s.label_idx}))
    return curves


# two-target resolution --------------------------------------------------------

def two_target_frames(n_frames: int, separation: float, seed: int = 0, sector: float = 0.19,
                      noise_sigma=(0.01, 0.05), params: RadarParams | None = None):
    """Frames with two equal targets sharing a range-Doppler cell, ``separation`` apart in u.

    Returns the dataset and the true (u1, u2, range_bin, doppler_index) per frame.
    """
    from .scene import PointTarget, Scene
    params = params or RadarParams()
    rng = np.random.default_rng([seed, 0x2A])
    half = sector - separation / 2
    if half < 0:
        raise ConfigurationError("separation does not fit in the sector")
    frames, truth = [], []
    for i in range(n_frames):
        c = rng.uniform(-half, half)
        r = int(rng.integers(8, params.n_samples // 2 - 8))
        d = int(rng.integers(-params.n_sweeps // 2 + 4, params.n_sweeps // 2 - 4))
        ph = rng.uniform(0, 2 * np.pi, 2)
        sigma = rng.uniform(*noise_sigma)
        scene = Scene((PointTarget(r, d, c - separation / 2, 1.0, ph[0]),
                       PointTarget(r, d, c + separation / 2, 1.0, ph[1])),
                      sigma, seed * 100_000 + i)
        frames.append(preprocess(synth_raw(scene, params)))
        truth.append((c - separation / 2, c + separation / 2, r, d + params.n_sweeps // 2))
    return Dataset(np.stack(frames)), truth


def resolves_pair(pattern, u, u_true, tolerance: float, dip_db: float = 0.0) -> bool:
    """True when the two strongest local maxima of a power pattern sit one near each
    true direction and are separated by a dip of at least ``dip_db``."""
    p = np.asarray(pattern, dtype=float)
    inner = (p[1:-1] > p[:-2]) & (p[1:-1] >= p[2:])
    peaks = np.flatnonzero(inner) + 1
    if len(peaks) < 2:
        return False
    top = np.sort(peaks[np.argsort(p[peaks])[-2:]])
    lo, hi = sorted(u_true)
    if abs(u[top[0]] - lo) > tolerance or abs(u[top[1]] - hi) > tolerance:
        return False
    dip = p[top[0]:top[1] + 1].min()
    return bool(dip < min(p[top]) * 10 ** (-dip_db / 10))


def resolution_rate(model_or_predictor, dataset: Dataset, truth, split: ChannelSplit,
                    tolerance: float, n_az: int = 256, dip_db: float = 0.0) -> float:
    """Fraction of two-target frames whose re-assembled beamformer resolves both targets."""
    from .scene import u_grid
    predict = (model_predictor(model_or_predictor) if isinstance(model_or_predictor, Model)
               else model_or_predictor)
    u = u_grid(n_az)
    hits = 0
    for full, (u1, u2, r, d) in zip(dataset.frames, truth):
        inputs = full[list(split.input_idx)]
        pred = predict(inputs, split, full)
        cut = reassemble(inputs, pred, split)[:, r, d]
        pattern = np.abs(beamform(cut[:, None, None], n_az, axis=0)[:, 0, 0]) ** 2
        hits += resolves_pair(pattern, u, (u1, u2), tolerance, dip_db)
    return hits / len(dataset)
