import json
import struct

import numpy as np
import pytest

from radar_recon import io as rio
from radar_recon.config import (ExperimentConfig, config_from_dict, load_config, save_config,
                                with_overrides)
from radar_recon.errors import ConfigurationError, FormatError


def test_frame_round_trip():
    a = np.arange(24.0).reshape(2, 3, 4) * (1 + 2j)
    b = rio.decode_frame(rio.encode_frame(a))
    assert b.dtype == np.complex128 and np.array_equal(a, b)
    r = np.linspace(0, 1, 5)
    assert np.array_equal(rio.decode_frame(rio.encode_frame(r)), r)


def test_frame_header_layout():
    blob = rio.encode_frame(np.zeros((2, 3), dtype=np.float64))
    assert blob[:4] == b"R2S2"
    assert struct.unpack_from("<HB2IB", blob, 4) == (1, 2, 2, 3, 1)
    assert len(blob) == 4 + 3 + 8 + 1 + 48


@pytest.mark.parametrize("mutate", [lambda b: b"XXXX" + b[4:], lambda b: b[:10],
                                    lambda b: b[:-8], lambda b: b[:4] + b"\x09\x00" + b[6:]])
def test_corrupt_frame(mutate):
    blob = rio.encode_frame(np.ones((2, 2)))
    with pytest.raises(FormatError):
        rio.decode_frame(mutate(blob))


def test_unsupported_dtype():
    with pytest.raises(FormatError):
        rio.encode_frame(np.ones(3, dtype=np.int32))


def test_dataset_container(tmp_path):
    frames = np.random.default_rng(0).normal(size=(3, 2, 4, 4)) + 0j
    path = rio.save_dataset(tmp_path, frames, [7, 8, 9], {"note": "x"})
    m = json.loads(open(path).read())
    assert [e["seed"] for e in m["frames"]] == [7, 8, 9] and m["note"] == "x"
    got, seeds, _ = rio.load_dataset(tmp_path)
    assert seeds == (7, 8, 9) and np.array_equal(got, frames)
    first = (tmp_path / "frame_00000007.r2s2").read_bytes()
    rio.save_dataset(tmp_path, frames, [7, 8, 9], {"note": "x"})
    assert (tmp_path / "frame_00000007.r2s2").read_bytes() == first


def test_missing_manifest(tmp_path):
    with pytest.raises(FileNotFoundError):
        rio.load_dataset(tmp_path)
    (tmp_path / "manifest.json").write_text("{not json")
    with pytest.raises(FormatError):
        rio.load_dataset(tmp_path)


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig().validate()
    p = tmp_path / "c.json"
    save_config(cfg, p)
    back = load_config(p)
    assert back == cfg and back.hash() == cfg.hash()


def test_config_partial_and_hash():
    a = config_from_dict({"train": {"epochs": 3}})
    assert a.train.epochs == 3 and a.train.batch_size == 8
    assert a.hash() != ExperimentConfig().hash()
    b = config_from_dict({"train": {"epochs": 3}, "output_dir": "elsewhere"})
    assert a.hash() == b.hash()


@pytest.mark.parametrize("d", [{"trian": {}}, {"train": {"epoch": 3}},
                               {"radar": {"n_channels": "16"}}, {"version": 2},
                               {"split": {"kind": "sparse_array", "n_input": 5}},
                               {"loss_weights": {"rd_rec": -1}}, {"model": {"attention": 1}},
                               {"train": []}])
def test_config_rejected(d):
    with pytest.raises(ConfigurationError):
        config_from_dict(d)


def test_config_tuples_and_nested():
    cfg = config_from_dict({"scene": {"noise_sigma": [0.1, 0.2]},
                            "sparsity": {"cfar": {"guard_cells": 1}}})
    assert cfg.scene.noise_sigma == (0.1, 0.2)
    assert cfg.sparsity.cfar.guard_cells == 1


def test_derived_configs():
    cfg = with_overrides(ExperimentConfig(), split={"kind": "random_missing"})
    mc = cfg.model_config()
    assert (mc.n_in_channels, mc.n_out_channels) == (16, 16)
    assert cfg.train_config().split_kind == "random_missing"
    sr = with_overrides(ExperimentConfig(), split={"kind": "super_resolution"})
    assert sr.model_config().n_out_channels == 12
