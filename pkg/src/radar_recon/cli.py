"""Command-line entry point: ``radar-recon <command> [--config PATH] [--out DIR] ...``.

Commands: simulate, train, eval, ablate, sweep, sparsity, baseline.  Every
command exits 0 only on complete success.  Each CSV it writes has a header
row and a ``config_hash`` column.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from . import io as rio
from .arrays import reassemble
from .cfar import threshold_sweep
from .config import ExperimentConfig, load_config, save_config, with_overrides
from .errors import ConfigurationError, RadarReconError
from .model import build_model, load_checkpoint, save_checkpoint
from .train import (Dataset, ablate, bicubic_predictor, eval_splits, evaluate, make_dataset,
                    missing_channel_sweep, model_predictor, oracle_predictor, train,
                    zero_predictor)

log = logging.getLogger("radar_recon")

METRIC_COLS = ("rd_l1", "rd_psnr_db", "bf_l1", "bf_psnr_db")


# helpers ---------------------------------------------------------------------

def write_csv(path, header, rows, config_hash):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(list(header) + ["config_hash"])
        for r in rows:
            w.writerow([_fmt(v) for v in r] + [config_hash])
    log.info("wrote %s", path)


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


def _data_dir(args, cfg, which):
    return os.path.join(args.data or os.path.join(cfg.output_dir, "data"), which)


def _load(args, cfg, which) -> Dataset:
    d = _data_dir(args, cfg, which)
    if not os.path.exists(os.path.join(d, rio.MANIFEST)):
        raise FileNotFoundError(f"no {which} dataset at {d}; run 'simulate' first")
    frames, seeds, _ = rio.load_dataset(d)
    return Dataset(frames, seeds)


def _checkpoint(args, cfg):
    path = args.checkpoint or os.path.join(cfg.output_dir, "model.ckpt")
    if not os.path.exists(path):
        raise FileNotFoundError(f"no checkpoint at {path}; run 'train' first")
    model = load_checkpoint(path)
    want = cfg.model_config()
    got = model.config
    if (got.n_in_channels, got.n_out_channels) != (want.n_in_channels, want.n_out_channels):
        raise ConfigurationError(
            f"checkpoint {path} maps {got.n_in_channels}->{got.n_out_channels} channels; "
            f"split {cfg.split.kind!r} needs {want.n_in_channels}->{want.n_out_channels}")
    return model


def _predictor(args, cfg):
    name = getattr(args, "predictor", "model")
    if name == "model":
        return model_predictor(_checkpoint(args, cfg))
    return {"oracle": oracle_predictor, "zero": zero_predictor,
            "bicubic": bicubic_predictor}[name]


# commands ------------------------------------------------------------------

def cmd_simulate(args, cfg: ExperimentConfig):
    n_train = args.n_frames or cfg.data.n_train
    sets = {"train": range(cfg.data.train_seed, cfg.data.train_seed + n_train),
            "val": range(cfg.data.val_seed, cfg.data.val_seed + cfg.data.n_val)}
    meta = {"config_hash": cfg.hash(), "kind": "range_doppler",
            "radar": cfg.to_dict()["radar"], "scene_spec": cfg.to_dict()["scene"],
            "preproc": cfg.to_dict()["preproc"]}
    for name, seeds in sets.items():
        ds = make_dataset(cfg.scene, seeds, cfg.radar, cfg.preproc)
        path = rio.save_dataset(_data_dir(args, cfg, name), ds.frames, ds.seeds, meta)
        log.info("%s: %d frames -> %s", name, len(ds), path)


def cmd_train(args, cfg: ExperimentConfig):
    tr, va = _load(args, cfg, "train"), _load(args, cfg, "val")
    model = build_model(cfg.model_config(), cfg.model.seed)
    ckdir = os.path.join(cfg.output_dir, "checkpoints")
    best, hist = train(tr, model, cfg.train_config(), va, checkpoint_dir=ckdir, eval_k=cfg.eval.k)
    save_checkpoint(best, os.path.join(cfg.output_dir, "model.ckpt"))
    h = cfg.hash()
    rows = [[r["step"], r["lr"]] + [r[t] for t in ("rd_rec", "rd_energy", "rd_tv", "bf_rec",
                                                   "bf_energy", "bf_tv")] + [r["total"]]
            for r in hist.steps]
    write_csv(os.path.join(cfg.output_dir, "train_log.csv"),
              ["step", "lr", "rd_rec", "rd_energy", "rd_tv", "bf_rec", "bf_energy", "bf_tv",
               "total"], rows, h)
    write_csv(os.path.join(cfg.output_dir, "val_log.csv"), ["epoch", *METRIC_COLS],
              [[e["epoch"]] + [e.get(c, float("nan")) for c in METRIC_COLS] for e in hist.epochs],
              h)
    log.info("best epoch %d of %d", hist.best_epoch, len(hist.epochs))


def cmd_eval(args, cfg: ExperimentConfig):
    from .plots import triptych
    va = _load(args, cfg, "val")
    predict = _predictor(args, cfg)
    rep = evaluate(predict, va, cfg.split.kind, cfg.split.n_input, cfg.eval.k,
                   cfg.loss_options.n_az, cfg.train.seed)
    write_csv(os.path.join(cfg.output_dir, "eval.csv"), ["predictor", *METRIC_COLS, "n_frames"],
              [[args.predictor] + [getattr(rep, c) for c in METRIC_COLS] + [rep.n_frames]],
              cfg.hash())
    print(_table([(args.predictor, rep)]))
    split = eval_splits(cfg.split.kind, 1, cfg.radar.n_channels, cfg.split.n_input,
                        cfg.eval.k, cfg.train.seed)[0]
    full = va.frames[0]
    inputs = full[list(split.input_idx)]
    shown_input = reassemble(inputs, np.zeros((len(split.label_idx),) + inputs.shape[1:]), split)
    predicted = reassemble(inputs, predict(inputs, split, full), split)
    triptych(os.path.join(cfg.output_dir, "bev_frame0.svg"), [shown_input, predicted, full],
             ["input", "predicted", "label"], cfg.radar)


def _table(rows):
    lines = [f"{'':<32}{'RD L1':>10}{'RD PSNR':>10}{'BF L1':>10}{'BF PSNR':>10}"]
    for name, rep in rows:
        lines.append(f"{name:<32}{rep.rd_l1:>10.4f}{rep.rd_psnr_db:>10.2f}"
                     f"{rep.bf_l1:>10.4f}{rep.bf_psnr_db:>10.2f}")
    return "\n".join(lines)


def cmd_ablate(args, cfg: ExperimentConfig):
    tr, va = _load(args, cfg, "train"), _load(args, cfg, "val")
    rows = ablate(tr, va, cfg.train_config(), cfg.model_config(), cfg.model.seed)
    write_csv(os.path.join(cfg.output_dir, "ablation.csv"), ["loss", *METRIC_COLS],
              [[r["loss"]] + [r[c] for c in METRIC_COLS] for r in rows], cfg.hash())
    from .metrics import MetricsReport
    text = _table([(r["loss"], MetricsReport(*(r[c] for c in METRIC_COLS), r["n_frames"]))
                   for r in rows])
    with open(os.path.join(cfg.output_dir, "ablation.txt"), "w") as f:
        f.write(text + "\n")
    print(text)


def cmd_sweep(args, cfg: ExperimentConfig):
    from .plots import curves
    if cfg.split.kind != "random_missing" and args.predictor == "model":
        raise ConfigurationError("the missing-channel sweep needs a model trained with "
                                 "split.kind = 'random_missing'")
    va = _load(args, cfg, "val")
    k_max = args.k_max or cfg.eval.k_max
    c = missing_channel_sweep(_predictor(args, cfg), va, k_max, cfg.loss_options.n_az,
                              cfg.train.seed)
    write_csv(os.path.join(cfg.output_dir, "sweep.csv"), ["k", *METRIC_COLS],
              [[c["k"][i]] + [c[m][i] for m in METRIC_COLS] for i in range(len(c["k"]))],
              cfg.hash())
    curves(os.path.join(cfg.output_dir, "sweep.svg"), c["k"],
           {"BF L1": c["bf_l1"], "RD L1": c["rd_l1"]}, "missing channels k", "relative L1")


def cmd_sparsity(args, cfg: ExperimentConfig):
    from .plots import curves
    sp = cfg.sparsity
    n = args.n_frames or sp.n_frames
    ds = make_dataset(cfg.scene, range(cfg.data.val_seed, cfg.data.val_seed + n), cfg.radar,
                      cfg.preproc)
    factors = list(sp.factors_db)
    res = threshold_sweep(ds.frames, factors, sp.cfar, cfg.loss_options.n_az,
                          cfg.split.n_input)
    rows = [[f, cls, region, res[region][cls][i]]
            for region in ("static", "dynamic", "all")
            for cls in ("empty", "single", "multiple", "sparse")
            for i, f in enumerate(factors)]
    write_csv(os.path.join(cfg.output_dir, "sparsity.csv"),
              ["factor_db", "class", "region", "fraction"], rows, cfg.hash())
    for region in ("static", "dynamic"):
        curves(os.path.join(cfg.output_dir, f"sparsity_{region}.svg"), factors,
               res[region], "CFAR threshold (dB)", "fraction of cells", region)


def cmd_baseline(args, cfg: ExperimentConfig):
    va = _load(args, cfg, "val")
    kind = cfg.split.kind
    splits = eval_splits(kind, len(va), cfg.radar.n_channels, cfg.split.n_input, cfg.eval.k,
                         cfg.train.seed, interior_only=(kind == "random_missing"))
    # refuses super-resolution before any model is loaded
    bicubic_predictor(va.frames[0][list(splits[0].input_idx)], splits[0])
    model = model_predictor(_checkpoint(args, cfg))
    reps = [("bicubic", evaluate(bicubic_predictor, va, kind, splits=splits)),
            ("model", evaluate(model, va, kind, splits=splits))]
    write_csv(os.path.join(cfg.output_dir, "baseline.csv"), ["method", *METRIC_COLS],
              [[n] + [getattr(r, c) for c in METRIC_COLS] for n, r in reps], cfg.hash())
    print(_table(reps))


COMMANDS = {"simulate": cmd_simulate, "train": cmd_train, "eval": cmd_eval,
            "ablate": cmd_ablate, "sweep": cmd_sweep, "sparsity": cmd_sparsity,
            "baseline": cmd_baseline}


# entry point -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="radar-recon", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (JSON); defaults apply if omitted")
    common.add_argument("--out", help="output directory (overrides output_dir)")
    common.add_argument("--seed", type=int, help="seed for model init and training")
    common.add_argument("--threads", type=int, help="cap BLAS/OpenMP threads")
    common.add_argument("--deterministic", action="store_true",
                        help="single-threaded, bit-reproducible run")
    common.add_argument("--data", help="dataset root (default OUT/data)")
    common.add_argument("-v", "--verbose", action="store_true")
    for name in COMMANDS:
        s = sub.add_parser(name, parents=[common])
        if name in ("simulate", "sparsity"):
            s.add_argument("--n-frames", type=int)
        if name in ("eval", "sweep", "baseline"):
            s.add_argument("--checkpoint")
        if name in ("eval", "sweep"):
            s.add_argument("--predictor", default="model",
                           choices=("model", "oracle", "zero", "bicubic"))
        if name == "sweep":
            s.add_argument("--k-max", type=int)
    return p


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig().validate()
    if args.out:
        cfg = replace(cfg, output_dir=args.out)
    if args.seed is not None:
        cfg = with_overrides(cfg, train={"seed": args.seed}, model={"seed": args.seed})
    return cfg


def _thread_limit(args):
    n = 1 if args.deterministic else args.threads
    if n is None:
        return contextlib.nullcontext()
    if n < 1:
        raise ConfigurationError("--threads must be >= 1")
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        os.makedirs(cfg.output_dir, exist_ok=True)
        save_config(cfg, os.path.join(cfg.output_dir, f"config_{args.command}.json"))
        with _thread_limit(args):
            COMMANDS[args.command](args, cfg)
    except (RadarReconError, ValueError, OSError, FloatingPointError, RuntimeError) as exc:
        print(f"radar-recon {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
