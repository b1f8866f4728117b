"""Input/label partitions of the receive array and their inverse."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ShapeError

SPLIT_KINDS = ("super_resolution", "sparse_array", "random_missing")


@dataclass(frozen=True)
class ChannelSplit:
    kind: str
    input_idx: tuple
    label_idx: tuple
    seed: int | None = None

    @property
    def n_total(self) -> int:
        return len(self.input_idx) + len(self.label_idx)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n_input": len(self.input_idx),
                "n_total": self.n_total, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelSplit":
        return make_split(d["kind"], d.get("n_total", 16), d.get("n_input", 4), d.get("seed"))


def make_split(kind: str, n_total: int = 16, n_input: int = 4,
               seed: int | None = None) -> ChannelSplit:
    if kind not in SPLIT_KINDS:
        raise ConfigurationError(f"unknown split kind {kind!r}")
    if not 1 <= n_input < n_total:
        raise ConfigurationError(f"need 1 <= n_input < n_total, got {n_input}, {n_total}")

    if kind == "super_resolution":
        start = (n_total - n_input) // 2
        inp = list(range(start, start + n_input))
    elif kind == "sparse_array":
        if n_input < 2 or (n_total - 1) % (n_input - 1):
            raise ConfigurationError(
                f"{n_input} inputs cannot be spread uniformly over {n_total} channels "
                "including both ends")
        inp = list(range(0, n_total, (n_total - 1) // (n_input - 1)))
    else:
        if seed is None:
            raise ConfigurationError("random_missing split needs a seed")
        rng = np.random.default_rng(seed)
        masked = set(rng.choice(n_total, size=n_total - n_input, replace=False).tolist())
        inp = [i for i in range(n_total) if i not in masked]

    label = [i for i in range(n_total) if i not in set(inp)]
    return ChannelSplit(kind, tuple(inp), tuple(label), seed if kind == "random_missing" else None)


def apply_split(rd: np.ndarray, s: ChannelSplit, axis: int = 0):
    """Return ``(input_rd, label_rd)`` channel subsets in split order."""
    if rd.shape[axis] != s.n_total:
        raise ShapeError(f"cube has {rd.shape[axis]} channels, split expects {s.n_total}")
    return np.take(rd, s.input_idx, axis=axis), np.take(rd, s.label_idx, axis=axis)


def reassemble(input_rd: np.ndarray, predicted_rd: np.ndarray, s: ChannelSplit,
               axis: int = 0) -> np.ndarray:
    """Put inputs and predictions back at their array positions."""
    if input_rd.shape[axis] != len(s.input_idx) or predicted_rd.shape[axis] != len(s.label_idx):
        raise ShapeError(
            f"got {input_rd.shape[axis]} input / {predicted_rd.shape[axis]} predicted channels, "
            f"split has {len(s.input_idx)} / {len(s.label_idx)}")
    a = np.moveaxis(input_rd, axis, 0)
    b = np.moveaxis(predicted_rd, axis, 0)
    if a.shape[1:] != b.shape[1:]:
        raise ShapeError(f"input and prediction shapes differ: {a.shape} vs {b.shape}")
    out = np.zeros((s.n_total,) + a.shape[1:], dtype=np.result_type(a, b))
    out[list(s.input_idx)] = a
    out[list(s.label_idx)] = b
    return np.moveaxis(out, 0, axis)


def scatter_matrices(s: ChannelSplit):
    """0/1 matrices placing inputs / predictions into the full channel order.

    ``full = P_in @ inputs + P_pred @ predictions`` along the channel axis.
    """
    p_in = np.zeros((s.n_total, len(s.input_idx)))
    p_in[list(s.input_idx), np.arange(len(s.input_idx))] = 1.0
    p_pred = np.zeros((s.n_total, len(s.label_idx)))
    p_pred[list(s.label_idx), np.arange(len(s.label_idx))] = 1.0
    return p_in, p_pred
