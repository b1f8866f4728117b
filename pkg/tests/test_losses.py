import numpy as np
import pytest

from radar_recon.arrays import make_split
from radar_recon.autodiff import Tensor, grad_check
from radar_recon.beamform import beamform
from radar_recon.errors import ConfigurationError, ShapeError
from radar_recon.losses import (LossOptions, LossWeights, beamform_pair, bf_loss,
                                masked_total_loss, rd_loss, smooth_l1, total_loss)


def cube(shape, seed):
    r = np.random.default_rng(seed)
    return r.normal(size=shape) + 1j * r.normal(size=shape)


def test_smooth_l1_as_printed():
    assert smooth_l1(0.4) == pytest.approx(0.08, abs=1e-16)
    assert smooth_l1(2.0) == 1.5
    assert smooth_l1(-2.0) == 1.5
    assert smooth_l1(0.0) == 0.0


def test_zero_error_terms():
    lab = cube((2, 12, 8, 6), 0)
    inp = cube((2, 4, 8, 6), 1)
    b = total_loss(lab, lab, inp, make_split("sparse_array"))
    assert b.rd_rec == b.rd_energy == b.bf_rec == b.bf_energy == 0.0
    assert b.rd_tv > 0 and b.bf_tv > 0


def test_rec_term_value():
    lab = cube((1, 2, 4, 4), 2)
    pred = lab + (1 + 1j)
    assert rd_loss(pred, lab).rd_rec == pytest.approx(2.0)


def test_energy_term_value():
    lab = np.ones((1, 1, 4, 4), dtype=complex)
    pred = 3 * lab  # mean amplitude differs by 2 -> linear branch
    assert rd_loss(pred, lab).rd_energy == pytest.approx(1.5)
    pred = 1.4 * lab  # difference 0.4 -> quadratic branch
    assert rd_loss(pred, lab).rd_energy == pytest.approx(0.08)


def test_tv_values():
    amp = np.zeros((1, 1, 3, 3))
    amp[0, 0, 1, 1] = 1.0
    # diagonal differences |a[k+1,l+1] - a[k,l]| over the 2x2 valid cells: two of four are 1
    assert rd_loss(amp + 0j, amp + 0j).rd_tv == pytest.approx(0.5)
    sep = rd_loss(amp + 0j, amp + 0j, opts=LossOptions(tv="separable")).rd_tv
    assert sep == pytest.approx(2 / 6 + 2 / 6)


def test_beamform_pair_matches_numpy():
    x = cube((2, 16, 4, 3), 3)
    re, im = beamform_pair((Tensor(x.real), Tensor(x.imag)), 64)
    assert np.allclose(re.data + 1j * im.data, beamform(x, 64, axis=1))


def test_bf_shape_mismatch():
    with pytest.raises(ConfigurationError):
        bf_loss(cube((1, 64, 4, 4), 0), cube((1, 32, 4, 4), 0))
    with pytest.raises(ShapeError):
        rd_loss(cube((1, 2, 4, 4), 0), cube((1, 3, 4, 4), 0))


def test_negative_weight_rejected():
    with pytest.raises(ConfigurationError):
        LossWeights(bf_tv=-1)


def test_weights_only():
    w = LossWeights.only("rd_rec")
    assert w.rd_rec == 1 and w.bf_tv == 0


def test_phase_invariance():
    lab, pred = cube((1, 12, 8, 6), 4), cube((1, 12, 8, 6), 5)
    inp = cube((1, 4, 8, 6), 6)
    s = make_split("sparse_array")
    rot = np.exp(1j * 0.7)
    a = total_loss(pred, lab, inp, s)
    b = total_loss(pred * rot, lab * rot, inp * rot, s)
    assert a.total == pytest.approx(b.total, rel=1e-12)


def test_total_loss_grad_check():
    s = make_split("sparse_array", 16, 4)
    lab, inp = cube((1, 12, 4, 4), 7), cube((1, 4, 4, 4), 8)
    re = Tensor(np.random.default_rng(9).normal(size=lab.shape), name="re")
    im = Tensor(np.random.default_rng(10).normal(size=lab.shape), name="im")
    rep = grad_check(lambda: total_loss((re, im), lab, inp, s).tensor, [re, im])
    assert max(rep.values()) < 1e-5, rep


def test_masked_loss_grad_check_and_zero():
    full = cube((2, 16, 4, 4), 11)
    mask = np.zeros((2, 16))
    mask[0, [3, 9]] = 1
    mask[1, [0]] = 1
    b = masked_total_loss(full, full, mask)
    assert b.rd_rec == b.bf_rec == b.rd_energy == b.bf_energy == 0.0
    re = Tensor(np.random.default_rng(12).normal(size=full.shape), name="re")
    im = Tensor(np.random.default_rng(13).normal(size=full.shape), name="im")
    rep = grad_check(lambda: masked_total_loss((re, im), full, mask).tensor, [re, im],
                     max_entries=60)
    assert max(rep.values()) < 1e-5, rep


def test_masked_loss_ignores_unmasked_predictions():
    full = cube((1, 16, 4, 4), 14)
    mask = np.zeros((1, 16))
    mask[0, 5] = 1
    out = full.copy()
    out[0, 2] += 100  # visible channel: prediction is discarded
    assert masked_total_loss(out, full, mask).rd_rec == 0.0
    assert masked_total_loss(out, full, mask).bf_rec == 0.0
