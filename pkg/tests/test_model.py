from dataclasses import replace

import numpy as np
import pytest

from radar_recon import autodiff as ad
from radar_recon.autodiff import Tensor, grad_check
from radar_recon.errors import ConfigurationError, FormatError, NumericFault, ShapeError
from radar_recon.model import (ModelConfig, analytic_param_count, build_model, load_checkpoint,
                               position_planes, save_checkpoint)


def test_default_shapes_and_count():
    cfg = ModelConfig(4, 12)
    m = build_model(cfg, seed=0)
    assert m.count_params() == analytic_param_count(cfg) == 275_480
    with ad.no_grad():
        out = m(np.zeros((8, 128, 48)))
    assert out.shape == (24, 128, 48)


@pytest.mark.parametrize("w,d", [(4, 1), (8, 2), (16, 4)])
def test_param_formula(w, d):
    cfg = ModelConfig(3, 5, base_width=w, depth=d, attention=d != 2)
    assert build_model(cfg).count_params() == analytic_param_count(cfg)


def test_seeded_init():
    a, b = build_model(ModelConfig(2, 2, 4, 2), 5), build_model(ModelConfig(2, 2, 4, 2), 5)
    assert all(np.array_equal(a.params[k].data, b.params[k].data) for k in a.params)
    c = build_model(ModelConfig(2, 2, 4, 2), 6)
    assert not np.array_equal(a.params["enc0.w"].data, c.params["enc0.w"].data)


def test_zero_head_gives_zero_output():
    m = build_model(ModelConfig(2, 3, 4, 2), 0)
    m.params["head.w"].data[:] = 0
    m.params["head.b"].data[:] = 0
    x = np.random.default_rng(0).normal(size=(4, 16, 8))
    assert not m(x).data.any()


def test_head_gain():
    cfg = ModelConfig(2, 3, 4, 2)
    assert not build_model(cfg, 0)(np.ones((4, 16, 8))).data.any()
    a = build_model(replace(cfg, head_gain=1.0), 0)
    b = build_model(replace(cfg, head_gain=0.5), 0)
    assert np.array_equal(b.params["head.w"].data, 0.5 * a.params["head.w"].data)
    assert np.array_equal(b.params["enc0.w"].data, a.params["enc0.w"].data)


def test_deterministic_forward():
    m = build_model(ModelConfig(2, 3, 4, 2), 0)
    x = np.random.default_rng(1).normal(size=(2, 4, 16, 8))
    assert np.array_equal(m(x).data, m(x).data)


def test_linearized_config_is_homogeneous():
    cfg = ModelConfig(2, 2, 4, 2, use_bias=False, use_norm=False, pos_embed=False,
                      attention=False)
    m = build_model(cfg, 0)
    x = np.random.default_rng(2).normal(size=(1, 4, 16, 8))
    t1, t2 = {}, {}
    m(x, taps=t1)
    m(2 * x, taps=t2)
    assert np.allclose(t2["pre_attention"].data, 2 * t1["pre_attention"].data)


def test_indivisible_spatial():
    m = build_model(ModelConfig(2, 2, 4, 3), 0)
    with pytest.raises(ConfigurationError):
        m(np.zeros((4, 20, 12)))
    with pytest.raises(ShapeError):
        m(np.zeros((6, 16, 16)))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_nonfinite_names_layer():
    m = build_model(ModelConfig(2, 2, 4, 2), 0)
    m.params["enc1.w"].data[0, 0, 0, 0] = np.inf
    with pytest.raises(NumericFault, match="enc1"):
        m(np.ones((4, 16, 8)))


def test_position_planes():
    p = position_planes(4, 8, 6)
    assert p.shape == (4, 8, 6)
    assert np.allclose(p[0, :, 0], np.sin(2 * np.pi * np.arange(8) / 8))
    assert np.allclose(p[3, 0, :], np.cos(2 * np.pi * np.arange(6) / 6))


def test_model_grad_check():
    m = build_model(ModelConfig(1, 2, base_width=2, depth=2, n_pos_planes=4, head_gain=1.0), seed=3)
    x = Tensor(np.random.default_rng(4).normal(size=(1, 2, 8, 8)), name="x")
    target = np.random.default_rng(5).normal(size=(1, 4, 8, 8))
    ts = list(m.params.values()) + [x]
    for name, t in m.params.items():
        t.name = name
    rep = grad_check(lambda: ((m(x) - Tensor(target)) ** 2).mean(), ts, max_entries=12)
    assert max(rep.values()) < 1e-5, {k: v for k, v in rep.items() if v > 1e-6}


def test_checkpoint_round_trip(tmp_path):
    m = build_model(ModelConfig(2, 3, 4, 2), 7)
    p = tmp_path / "m.ckpt"
    blob = save_checkpoint(m, p)
    assert blob[:4] == b"R2CK" and p.read_bytes() == blob
    m2 = load_checkpoint(p)
    assert m2.config == m.config
    assert all(np.array_equal(m.params[k].data, m2.params[k].data) for k in m.params)
    assert save_checkpoint(m2, None) == blob


def test_checkpoint_corrupt(tmp_path):
    m = build_model(ModelConfig(2, 3, 4, 2), 7)
    blob = save_checkpoint(m, None)
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"XXXX" + blob[4:])
    with pytest.raises(FormatError):
        load_checkpoint(bad)
    bad.write_bytes(blob[:200])
    with pytest.raises(FormatError):
        load_checkpoint(bad)
