"""
Learning twelve channels from four
==================================

A small Unet sees channels 0, 5, 10 and 15 and predicts the twelve in
between.  Training is self-supervised: the labels are simply the measured
channels the network is not shown.

This demo trains for a few minutes and the model still trails cubic
interpolation.  The desk run (256 frames, width-16 model, 20 epochs, about
20 minutes) reaches beamformer L1 1.08 against 1.38 for the baseline and
separates 96% of close target pairs.
"""
from radar_recon import SceneSpec, build_model, make_split
from radar_recon import train as tr
from radar_recon.config import DESK_WEIGHTS

spec = SceneSpec(n_targets=(1, 3), noise_sigma=(0.03, 0.3), sin_az_max=0.19)
train_set = tr.make_dataset(spec, range(32))
val_set = tr.make_dataset(spec, range(100000, 100008))

model = build_model(tr.model_config_for("sparse_array", base_width=8, depth=3), seed=0)
print("parameters:", model.count_params())

cfg = tr.TrainConfig(batch_size=8, epochs=4, weights=DESK_WEIGHTS)
best, hist = tr.train(train_set, model, cfg, val_set)
for e in hist.epochs:
    print(f"epoch {e['epoch']}: validation bf L1 {e['bf_l1']:.3f}")

print("bicubic:", tr.evaluate(tr.bicubic_predictor, val_set).as_dict())
print("model:  ", tr.evaluate(best, val_set).as_dict())

# two targets 1.5 beamwidths apart: can the completed array separate them?
bw16 = 0.1107
frames, truth = tr.two_target_frames(20, 1.5 * bw16, seed=3, noise_sigma=(0.3, 1.0))
split = make_split("sparse_array")
for name, p in (("4 channels only", tr.zero_predictor), ("bicubic", tr.bicubic_predictor),
                ("model", best), ("all 16 measured", tr.oracle_predictor)):
    rate = tr.resolution_rate(p, frames, truth, split, 0.5 * bw16)
    print(f"{name:16s} resolves {rate:.0%} of pairs")
print("loss log head:\n" + "\n".join(hist.log_csv().splitlines()[:3]))
