"""Experiment configuration: a versioned JSON document mapped onto dataclasses.

Unknown keys are rejected at every level, so a typo cannot silently fall
back to a default.
"""
from __future__ import annotations

import hashlib
import json
import typing
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace

from .arrays import make_split
from .cfar import CfarConfig
from .errors import ConfigurationError
from .losses import LossOptions, LossWeights
from .model import ModelConfig
from .preproc import PreprocConfig
from .scene import RadarParams, SceneSpec
from .train import TrainConfig, model_config_for

CONFIG_VERSION = 1


@dataclass(frozen=True)
class SplitSection:
    kind: str = "sparse_array"
    n_input: int = 4
    k_range: tuple = (1, 8)


@dataclass(frozen=True)
class ModelSection:
    base_width: int = 16
    depth: int = 3
    leaky_slope: float = 0.01
    attention: bool = True
    pos_embed: bool = True
    n_pos_planes: int = 4
    head_gain: float = 0.0
    seed: int = 0


@dataclass(frozen=True)
class TrainSection:
    batch_size: int = 8
    epochs: int = 20
    lr_start: float = 3.141e-4
    lr_end: float = 3.141e-7
    patience: int = 5
    seed: int = 0


@dataclass(frozen=True)
class DataSection:
    n_train: int = 256
    n_val: int = 32
    train_seed: int = 0
    val_seed: int = 100_000


@dataclass(frozen=True)
class EvalSection:
    k: int = 1
    k_max: int = 8
    n_two_target: int = 100
    two_target_seed: int = 7


@dataclass(frozen=True)
class SparsitySection:
    cfar: CfarConfig = CfarConfig()
    factors_db: tuple = (0.0, 3.0, 6.0, 9.0, 12.0, 15.0, 18.0, 21.0, 24.0, 27.0, 30.0)
    n_frames: int = 16


def _desk_scene():
    return SceneSpec(n_targets=(1, 3), amplitude=(0.5, 2.0), noise_sigma=(0.03, 0.3),
                     sin_az_max=0.19)


# total variation also penalises the noise the labels carry; at full weight it
# holds a desk-sized model at the empty prediction
DESK_WEIGHTS = LossWeights(rd_tv=0.3, bf_tv=0.3)


@dataclass(frozen=True)
class ExperimentConfig:
    version: int = CONFIG_VERSION
    radar: RadarParams = RadarParams()
    scene: SceneSpec = field(default_factory=_desk_scene)
    preproc: PreprocConfig = PreprocConfig()
    split: SplitSection = SplitSection()
    model: ModelSection = ModelSection()
    train: TrainSection = TrainSection()
    loss_weights: LossWeights = DESK_WEIGHTS
    loss_options: LossOptions = LossOptions()
    data: DataSection = DataSection()
    eval: EvalSection = EvalSection()
    sparsity: SparsitySection = SparsitySection()
    output_dir: str = "runs"

    def validate(self) -> "ExperimentConfig":
        if self.version != CONFIG_VERSION:
            raise ConfigurationError(f"config version {self.version} unsupported "
                                     f"(this build reads version {CONFIG_VERSION})")
        self.radar.validate()
        if self.split.kind == "random_missing":
            lo, hi = self.split.k_range
            if not 1 <= lo <= hi < self.radar.n_channels:
                raise ConfigurationError(f"k_range {self.split.k_range} invalid")
        else:
            make_split(self.split.kind, self.radar.n_channels, self.split.n_input)
        self.train_config().validate()
        self.model_config().validate()
        for name in ("n_train", "n_val"):
            if getattr(self.data, name) < 1:
                raise ConfigurationError(f"data.{name} must be >= 1")
        return self

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def hash(self) -> str:
        """Digest of everything except the output location."""
        d = self.to_dict()
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def train_config(self) -> TrainConfig:
        t = self.train
        return TrainConfig(batch_size=t.batch_size, lr_start=t.lr_start, lr_end=t.lr_end,
                           epochs=t.epochs, seed=t.seed, weights=self.loss_weights,
                           loss_options=self.loss_options, split_kind=self.split.kind,
                           n_input=self.split.n_input, k_range=tuple(self.split.k_range),
                           patience=t.patience)

    def model_config(self) -> ModelConfig:
        m = self.model
        return model_config_for(self.split.kind, self.radar.n_channels, self.split.n_input,
                                base_width=m.base_width, depth=m.depth,
                                leaky_slope=m.leaky_slope, attention=m.attention,
                                pos_embed=m.pos_embed, n_pos_planes=m.n_pos_planes,
                                head_gain=m.head_gain)


def _check_leaf(hint, value, where):
    if hint is bool and not isinstance(value, bool):
        raise ConfigurationError(f"{where}: expected true/false, got {value!r}")
    if hint is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ConfigurationError(f"{where}: expected an integer, got {value!r}")
    if hint is float and (isinstance(value, bool) or not isinstance(value, (int, float))):
        raise ConfigurationError(f"{where}: expected a number, got {value!r}")
    if hint is str and not isinstance(value, str):
        raise ConfigurationError(f"{where}: expected a string, got {value!r}")


def _tuplify(v):
    return tuple(_tuplify(x) for x in v) if isinstance(v, list) else v


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigurationError(f"{where}: expected an object, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(f"{where}: unknown key(s) {unknown}")
    kw = {}
    for k, v in data.items():
        hint = hints[k]
        if is_dataclass(hint):
            v = _build(hint, v, f"{where}.{k}")
        else:
            _check_leaf(hint, v, f"{where}.{k}")
            v = _tuplify(v)
            if hint is float and isinstance(v, int):
                v = float(v)
        kw[k] = v
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{where}: {exc}") from exc


def config_from_dict(d: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, d, "config").validate()


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as f:
            d = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(d)


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as f:
        f.write(cfg.to_json())


def with_overrides(cfg: ExperimentConfig, **sections) -> ExperimentConfig:
    """Replace fields inside sections, e.g. ``with_overrides(cfg, train={"epochs": 2})``."""
    out = cfg
    for name, values in sections.items():
        out = replace(out, **{name: replace(getattr(out, name), **values)})
    return out.validate()
