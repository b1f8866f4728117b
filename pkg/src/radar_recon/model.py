"""Encoder-decoder reconstruction network built on :mod:`radar_recon.autodiff`.

Input is a stack of ``2 * n_in`` real planes (real parts, then imaginary
parts of the input channels) over (range, Doppler); output is ``2 * n_out``
planes in the same layout.

Layout for ``depth = d`` and ``base_width = w`` (``C_i = w * 2**i``)::

    [input planes | position planes]
    encoder i = 0..d-1 : conv3x3 -> instance norm -> leaky ReLU -> (skip_i) -> avg-pool 2x2
    bottleneck         : conv3x3 (C_{d-1} -> C_d) -> norm -> leaky ReLU -> channel attention
    decoder i = d-1..0 : transpose conv3x3 stride 2 -> norm -> leaky ReLU -> concat skip_i
    head               : conv3x3 (2 w -> 2 n_out)

Parameter count (with bias, norm and attention enabled), ``c0 = 2 n_in + P``::

    conv(a, b) = 9 a b       norm(b) = 2 b       attn(C) = 3 (C^2 + C)
    total = sum_i [conv(c_in_i, C_i) + norm(C_i)]          c_in_0 = c0, c_in_i = C_{i-1}
          + conv(C_{d-1}, C_d) + norm(C_d) + attn(C_d)
          + conv(C_d, C_{d-1}) + norm(C_{d-1})
          + sum_{i<d-1} [conv(2 C_{i+1}, C_i) + norm(C_i)]
          + conv(2 w, 2 n_out) + 2 n_out

Convolutions followed by instance norm carry no bias (the norm removes it);
transpose convolutions count like ``conv``.  For 4 -> 12 channels, w = 16,
d = 3, P = 4 this is 275,480.

The head weights are scaled by ``head_gain`` after initialisation.  The
default 0 makes an untrained model predict empty channels; the labels are
tiny compared with unit-variance features, and a full-scale head spends most
of a desk-sized training budget shrinking its own output.
"""
from __future__ import annotations

import io
import json
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigurationError, FormatError, NumericFault, ShapeError


@dataclass(frozen=True)
class ModelConfig:
    n_in_channels: int
    n_out_channels: int
    base_width: int = 16
    depth: int = 3
    leaky_slope: float = 0.01
    attention: bool = True
    pos_embed: bool = True
    n_pos_planes: int = 4
    norm_eps: float = 1e-5
    use_bias: bool = True
    use_norm: bool = True
    head_gain: float = 0.0

    def validate(self):
        if self.depth < 1:
            raise ConfigurationError("depth must be >= 1")
        if self.n_in_channels < 1 or self.n_out_channels < 1 or self.base_width < 1:
            raise ConfigurationError("channel counts and width must be positive")
        if self.pos_embed and (self.n_pos_planes < 4 or self.n_pos_planes % 4):
            raise ConfigurationError("n_pos_planes must be a positive multiple of 4")
        return self

    @property
    def in_planes(self) -> int:
        return 2 * self.n_in_channels + (self.n_pos_planes if self.pos_embed else 0)


@dataclass
class Model:
    config: ModelConfig
    params: dict = field(default_factory=dict)

    def parameters(self):
        return list(self.params.values())

    def count_params(self) -> int:
        return int(sum(p.data.size for p in self.params.values()))

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def __call__(self, x, taps=None):
        return forward(self, x, taps)


def analytic_param_count(cfg: ModelConfig) -> int:
    w, d = cfg.base_width, cfg.depth
    C = [w * 2 ** i for i in range(d + 1)]
    b = 1 if cfg.use_bias else 0
    pre_norm_bias = 0 if cfg.use_norm else b

    def conv(a, o, bias=pre_norm_bias):
        return 9 * a * o + bias * o

    def norm(o):
        return 2 * o if cfg.use_norm else 0

    total = 0
    c_in = cfg.in_planes
    for i in range(d):
        total += conv(c_in, C[i]) + norm(C[i])
        c_in = C[i]
    total += conv(C[d - 1], C[d]) + norm(C[d])
    if cfg.attention:
        total += 3 * (C[d] ** 2 + b * C[d])
    total += conv(C[d], C[d - 1]) + norm(C[d - 1])
    for i in range(d - 2, -1, -1):
        total += conv(2 * C[i + 1], C[i]) + norm(C[i])
    total += conv(2 * w, 2 * cfg.n_out_channels, bias=b)
    return total


def build_model(cfg: ModelConfig, seed: int = 0, spatial=None) -> Model:
    cfg.validate()
    if spatial is not None:
        _check_spatial(cfg, spatial)
    rng = np.random.default_rng(seed)
    params = {}

    def conv(name, c_in, c_out, transpose=False, bias=cfg.use_bias and not cfg.use_norm):
        fan_in = 9 * c_in
        bound = np.sqrt(6.0 / ((1 + cfg.leaky_slope ** 2) * fan_in))
        shape = (c_in, c_out, 3, 3) if transpose else (c_out, c_in, 3, 3)
        params[f"{name}.w"] = Tensor(rng.uniform(-bound, bound, shape), True, f"{name}.w")
        if bias:
            params[f"{name}.b"] = Tensor(
                rng.uniform(-1, 1, c_out) / np.sqrt(fan_in), True, f"{name}.b")

    def norm(name, c):
        if cfg.use_norm:
            params[f"{name}.gamma"] = Tensor(np.ones(c), True, f"{name}.gamma")
            params[f"{name}.beta"] = Tensor(np.zeros(c), True, f"{name}.beta")

    w, d = cfg.base_width, cfg.depth
    C = [w * 2 ** i for i in range(d + 1)]
    c_in = cfg.in_planes
    for i in range(d):
        conv(f"enc{i}", c_in, C[i])
        norm(f"enc{i}.norm", C[i])
        c_in = C[i]
    conv("mid", C[d - 1], C[d])
    norm("mid.norm", C[d])
    if cfg.attention:
        bound = 1.0 / np.sqrt(C[d])
        for proj in ("q", "k", "v"):
            name = f"attn.{proj}"
            params[f"{name}.w"] = Tensor(rng.uniform(-bound, bound, (C[d], C[d])), True, f"{name}.w")
            if cfg.use_bias:
                params[f"{name}.b"] = Tensor(
                    rng.uniform(-bound, bound, (C[d], 1)), True, f"{name}.b")
    c_in = C[d]
    for i in range(d - 1, -1, -1):
        conv(f"dec{i}", c_in, C[i], transpose=True)
        norm(f"dec{i}.norm", C[i])
        c_in = 2 * C[i]
    conv("head", 2 * w, 2 * cfg.n_out_channels, bias=cfg.use_bias)
    # a zero head starts from the empty prediction instead of unit-scale noise
    for k in ("head.w", "head.b"):
        if k in params:
            params[k].data *= cfg.head_gain
    return Model(cfg, params)


def position_planes(n_planes: int, h: int, w: int) -> np.ndarray:
    """Fixed 2-D sinusoidal embedding, ``n_planes`` planes of shape (h, w)."""
    rows = np.arange(h)[:, None] / h
    cols = np.arange(w)[None, :] / w
    planes = []
    for f in range(1, n_planes // 4 + 1):
        for grid in (rows, cols):
            arg = 2 * np.pi * f * np.broadcast_to(grid, (h, w))
            planes += [np.sin(arg), np.cos(arg)]
    return np.stack(planes)


def _check_spatial(cfg, spatial):
    h, w = spatial
    step = 2 ** cfg.depth
    if h % step or w % step:
        raise ConfigurationError(
            f"spatial dims {h}x{w} must be divisible by 2**depth = {step}")


def channel_attention(m: Model, f: Tensor) -> Tensor:
    """Self-attention across feature channels: ``f + softmax(Q K^T / sqrt(d)) V``.

    Q, K, V are 1x1 projections of ``f``; ``d`` is the number of spatial cells.
    """
    n, c, h, w = f.shape
    flat = f.reshape(n, c, h * w)
    p = m.params

    def proj(name):
        out = p[f"attn.{name}.w"] @ flat
        return out + p[f"attn.{name}.b"] if f"attn.{name}.b" in p else out

    q, k, v = proj("q"), proj("k"), proj("v")
    scores = (q @ k.transpose(0, 2, 1)) * (1.0 / np.sqrt(h * w))
    attn = ad.softmax(scores, axis=-1)
    return f + (attn @ v).reshape(n, c, h, w)


def forward(m: Model, x, taps=None) -> Tensor:
    """Run the network on ``(2 n_in, R, D)`` or batched ``(N, 2 n_in, R, D)`` input."""
    cfg = m.config
    x = ad.as_tensor(x)
    squeeze = x.ndim == 3
    if squeeze:
        x = x.reshape((1,) + x.shape)
    if x.ndim != 4 or x.shape[1] != 2 * cfg.n_in_channels:
        raise ShapeError(f"expected (N, {2 * cfg.n_in_channels}, R, D) input, got {x.shape}")
    n, _, h, w = x.shape
    _check_spatial(cfg, (h, w))
    p = m.params

    def check(name, t):
        if not np.all(np.isfinite(t.data)):
            raise NumericFault(f"non-finite values after layer {name!r}")
        if taps is not None:
            taps[name] = t
        return t

    def block(name, t, transpose=False):
        op = ad.conv_transpose2d if transpose else ad.conv2d
        t = op(t, p[f"{name}.w"], p.get(f"{name}.b"))
        check(f"{name}.conv", t)
        if cfg.use_norm:
            t = ad.instance_norm(t, p[f"{name}.norm.gamma"], p[f"{name}.norm.beta"], cfg.norm_eps)
        return check(name, ad.leaky_relu(t, cfg.leaky_slope))

    if cfg.pos_embed:
        pos = np.broadcast_to(position_planes(cfg.n_pos_planes, h, w),
                              (n, cfg.n_pos_planes, h, w))
        x = ad.concat([x, Tensor(pos)], axis=1)

    skips = []
    t = x
    for i in range(cfg.depth):
        t = block(f"enc{i}", t)
        skips.append(t)
        t = ad.avg_pool2d(t, 2)
    t = block("mid", t)
    if taps is not None:
        taps["pre_attention"] = t
    if cfg.attention:
        t = check("attn", channel_attention(m, t))
    for i in range(cfg.depth - 1, -1, -1):
        t = block(f"dec{i}", t, transpose=True)
        t = ad.concat([t, skips[i]], axis=1)
    out = check("head", ad.conv2d(t, p["head.w"], p.get("head.b")))
    if squeeze:
        out = out.reshape(out.shape[1:])
    return out


# checkpoints -----------------------------------------------------------------

CKPT_MAGIC = b"R2CK"
CKPT_VERSION = 1


def save_checkpoint(m: Model, path) -> bytes:
    """Write ``m`` to ``path`` (or just return the bytes if ``path`` is None)."""
    buf = io.BytesIO()
    cfg = json.dumps(asdict(m.config), sort_keys=True).encode()
    buf.write(CKPT_MAGIC)
    buf.write(struct.pack("<HI", CKPT_VERSION, len(cfg)))
    buf.write(cfg)
    buf.write(struct.pack("<I", len(m.params)))
    for name, t in m.params.items():
        raw = name.encode()
        buf.write(struct.pack("<H", len(raw)))
        buf.write(raw)
        buf.write(struct.pack("<H", t.data.ndim))
        buf.write(struct.pack(f"<{t.data.ndim}I", *t.data.shape))
        buf.write(np.ascontiguousarray(t.data, dtype="<f8").tobytes())
    data = buf.getvalue()
    if path is not None:
        with open(path, "wb") as fh:
            fh.write(data)
    return data


def load_checkpoint(path) -> Model:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != CKPT_MAGIC:
        raise FormatError(f"{path}: not a checkpoint (bad magic {data[:4]!r})")
    try:
        version, n_cfg = struct.unpack_from("<HI", data, 4)
        if version != CKPT_VERSION:
            raise FormatError(f"{path}: unsupported checkpoint version {version}")
        off = 10
        cfg = ModelConfig(**json.loads(data[off:off + n_cfg]))
        off += n_cfg
        (count,) = struct.unpack_from("<I", data, off)
        off += 4
        params = {}
        for _ in range(count):
            (ln,) = struct.unpack_from("<H", data, off)
            off += 2
            name = data[off:off + ln].decode()
            off += ln
            (ndim,) = struct.unpack_from("<H", data, off)
            off += 2
            shape = struct.unpack_from(f"<{ndim}I", data, off)
            off += 4 * ndim
            size = int(np.prod(shape)) if shape else 1
            arr = np.frombuffer(data, dtype="<f8", count=size, offset=off).reshape(shape)
            off += 8 * size
            params[name] = Tensor(arr.astype(np.float64), True, name)
    except (struct.error, ValueError, TypeError) as exc:
        raise FormatError(f"{path}: corrupt checkpoint ({exc})") from exc
    return Model(cfg, params)
