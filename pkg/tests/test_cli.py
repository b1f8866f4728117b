import csv
import json
import os

import pytest

from radar_recon.cli import main

TINY = {
    "model": {"base_width": 2, "depth": 3},
    "train": {"epochs": 1, "batch_size": 2},
    "data": {"n_train": 4, "n_val": 2},
    "eval": {"k_max": 3},
    "sparsity": {"n_frames": 2, "factors_db": [0, 10, 20]},
}


def write_cfg(tmp_path, extra=None, name="cfg.json"):
    d = json.loads(json.dumps(TINY))
    for k, v in (extra or {}).items():
        d.setdefault(k, {}).update(v)
    p = tmp_path / name
    p.write_text(json.dumps(d))
    return str(p)


def rows(path):
    with open(path) as f:
        return list(csv.reader(f))


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    cfg = write_cfg(tmp)
    out = str(tmp / "out")
    assert main(["simulate", "--config", cfg, "--out", out]) == 0
    assert main(["train", "--config", cfg, "--out", out, "--deterministic"]) == 0
    return tmp, cfg, out


def test_simulate_manifest(run):
    _, _, out = run
    m = json.load(open(os.path.join(out, "data", "train", "manifest.json")))
    assert len(m["frames"]) == 4 and m["format"] == "R2S2"


def test_simulate_idempotent(run, tmp_path):
    _, cfg, out = run
    other = str(tmp_path / "again")
    assert main(["simulate", "--config", cfg, "--out", other]) == 0
    name = "frame_00000000.r2s2"
    a = open(os.path.join(out, "data", "train", name), "rb").read()
    assert open(os.path.join(other, "data", "train", name), "rb").read() == a


def test_train_artifacts(run):
    _, _, out = run
    log = rows(os.path.join(out, "train_log.csv"))
    assert log[0][:2] == ["step", "lr"] and log[0][-1] == "config_hash"
    assert len(log) == 1 + 2
    assert os.path.exists(os.path.join(out, "checkpoints", "epoch_000.ckpt"))
    assert os.path.exists(os.path.join(out, "model.ckpt"))


def test_eval_oracle_zero(run, capsys):
    _, cfg, out = run
    assert main(["eval", "--config", cfg, "--out", out, "--predictor", "oracle"]) == 0
    r = rows(os.path.join(out, "eval.csv"))
    assert r[0] == ["predictor", "rd_l1", "rd_psnr_db", "bf_l1", "bf_psnr_db", "n_frames",
                    "config_hash"]
    assert float(r[1][1]) == 0.0 and float(r[1][3]) == 0.0
    assert os.path.exists(os.path.join(out, "bev_frame0.svg"))
    assert main(["eval", "--config", cfg, "--out", out]) == 0


def test_baseline_table(run):
    _, cfg, out = run
    assert main(["baseline", "--config", cfg, "--out", out]) == 0
    r = rows(os.path.join(out, "baseline.csv"))
    assert [x[0] for x in r[1:]] == ["bicubic", "model"] and len(r[0]) == 6


def test_baseline_refuses_super_resolution(run, capsys):
    tmp, _, out = run
    cfg = write_cfg(tmp, {"split": {"kind": "super_resolution"}}, "sr.json")
    assert main(["baseline", "--config", cfg, "--out", out]) == 1
    assert "edge" in capsys.readouterr().err


def test_sparsity_outputs(run):
    _, cfg, out = run
    assert main(["sparsity", "--config", cfg, "--out", out]) == 0
    r = rows(os.path.join(out, "sparsity.csv"))
    assert r[0] == ["factor_db", "class", "region", "fraction", "config_hash"]
    assert len(r) == 1 + 3 * 4 * 3
    svg = open(os.path.join(out, "sparsity_static.svg")).read()
    assert "<dc:date>" not in svg


def test_sweep_points(run):
    tmp, _, out = run
    cfg = write_cfg(tmp, {"split": {"kind": "random_missing"}}, "rm.json")
    rm_out = os.path.join(out, "rm")
    assert main(["train", "--config", cfg, "--out", rm_out,
                 "--data", os.path.join(out, "data")]) == 0
    assert main(["sweep", "--config", cfg, "--out", rm_out,
                 "--data", os.path.join(out, "data")]) == 0
    r = rows(os.path.join(rm_out, "sweep.csv"))
    assert [int(x[0]) for x in r[1:]] == [1, 2, 3]


def test_ablate_rows(run):
    _, cfg, out = run
    assert main(["ablate", "--config", cfg, "--out", out]) == 0
    r = rows(os.path.join(out, "ablation.csv"))
    assert len(r) == 7 and r[1][0] == "L_rd_rec" and r[6][0] == "L_rd + L_bf"


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["train", "--out", str(tmp_path / "empty")]) == 1
    assert "simulate" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text('{"bogus": 1}')
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path)]) == 1
    with pytest.raises(SystemExit) as e:
        main(["fly"])
    assert e.value.code != 0


def test_sweep_needs_random_missing(run):
    _, cfg, out = run
    assert main(["sweep", "--config", cfg, "--out", out]) == 1
