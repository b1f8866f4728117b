import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from radar_recon.cfar import (CfarConfig, azimuth_peaks, cfar_detect, noise_estimate,
                              occupancy, threshold_sweep)
from radar_recon.errors import ConfigurationError
from radar_recon.preproc import preprocess
from radar_recon.scene import PointTarget, Scene, SceneSpec, make_scene, synth_raw


def test_zero_map():
    assert not cfar_detect(np.zeros((4, 64, 6))).any()


def test_single_strong_cell():
    p = np.ones((3, 64, 5))
    p[1, 30, 2] = 100.0
    det = cfar_detect(p, CfarConfig(threshold_factor_db=10))
    assert det.sum() == 1 and det[1, 30, 2]


def test_huge_factor_empty():
    p = np.random.default_rng(0).exponential(size=(4, 64, 4))
    assert not cfar_detect(p, CfarConfig(threshold_factor_db=400)).any()


def test_noise_estimate_brute_force():
    p = np.random.default_rng(1).exponential(size=(1, 40, 1))
    cfg = CfarConfig(guard_cells=2, train_cells=4)
    est = noise_estimate(p, cfg)[0, :, 0]
    for i in range(40):
        cells = [j for j in range(i - 6, i + 7) if 0 <= j < 40 and abs(j - i) > 2]
        assert est[i] == pytest.approx(p[0, cells, 0].mean())


def test_global_style():
    p = np.ones((2, 20, 2))
    p[0, 3, 1] = 20
    det = cfar_detect(p, CfarConfig(style="global_noise_floor", threshold_factor_db=10))
    assert det.sum() == 1


def test_window_too_long():
    with pytest.raises(ConfigurationError):
        cfar_detect(np.ones((2, 10, 2)), CfarConfig(guard_cells=2, train_cells=8))


@pytest.mark.parametrize("kw", [dict(train_cells=0), dict(threshold_factor_db=-1),
                                dict(style="os")])
def test_bad_config(kw):
    with pytest.raises(ConfigurationError):
        CfarConfig(**kw)


@settings(max_examples=20, deadline=None)
@given(st.floats(1e-3, 1e3), st.integers(0, 50))
def test_scale_invariance(c, seed):
    p = np.random.default_rng(seed).exponential(size=(4, 48, 3))
    assert np.array_equal(cfar_detect(p), cfar_detect(c * p))


def test_occupancy_oracles():
    m = np.zeros((64, 4, 3), dtype=bool)
    assert occupancy(m, 16).empty_frac == 1.0
    m[::16] = True  # one detection per coarse cell
    s = occupancy(m, 16)
    assert s.single_frac == 1.0 and s.sparse_frac == 1.0
    m = np.zeros((64, 4, 3), dtype=bool)
    m[[3, 5], 1, 2] = True
    s = occupancy(m, 16)
    assert s.multiple_frac == pytest.approx(1 / s.n_cells) and s.n_cells == 4 * 4 * 3
    assert s.empty_frac + s.single_frac + s.multiple_frac == pytest.approx(1, abs=1e-12)


def test_occupancy_non_nesting():
    with pytest.raises(ConfigurationError):
        occupancy(np.zeros((64, 2, 2), dtype=bool), 12)


def test_azimuth_peaks():
    p = np.array([0, 1, 3, 2, 2, 5, 5, 1.0])[:, None]
    assert np.flatnonzero(azimuth_peaks(p)[:, 0]).tolist() == [2, 5]


def test_sweep_partition_and_monotone():
    spec = SceneSpec(n_targets=(2, 6), noise_sigma=(0.3, 1.0))
    frames = [preprocess(synth_raw(make_scene(spec, s))) for s in range(3)]
    factors = [0, 3, 6, 10, 15, 20, 30]
    res = threshold_sweep(frames, factors)
    for region in ("static", "dynamic", "all"):
        r = res[region]
        total = r["empty"] + r["single"] + r["multiple"]
        assert np.all(np.abs(total - 1) <= 1e-12)
        assert np.all(np.diff(r["empty"]) >= 0)
        assert np.allclose(r["sparse"], r["empty"] + r["single"])


def test_dense_static_scene_not_sparse():
    # several static targets per coarse azimuth cell at one range
    targets = tuple(PointTarget(40 + (i % 2), 0, u, 1.0, 0.7 * i)
                    for i, u in enumerate(np.linspace(-0.7, 0.7, 12)))
    frame = preprocess(synth_raw(Scene(targets, 0.05, 1)))
    res = threshold_sweep([frame], [3, 30])
    assert res["static"]["sparse"][0] < 1.0


def test_empty_factor_list():
    with pytest.raises(ConfigurationError):
        threshold_sweep([np.zeros((16, 32, 8))], [])
