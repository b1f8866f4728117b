"""
How many channels can go missing?
=================================

A random-missing model is trained with between one and eight channels
dropped at random, then evaluated with exactly k channels dropped for
k = 1..8.  Errors grow with k.  Three epochs are not enough to beat
zero-filling, whose relative L1 profits from the measured channels left in
place; the trend with k is the point here.
"""
import matplotlib.pyplot as plt

from radar_recon import SceneSpec, build_model
from radar_recon import train as tr
from radar_recon.config import DESK_WEIGHTS

spec = SceneSpec(n_targets=(1, 3), noise_sigma=(0.03, 0.3), sin_az_max=0.19)
train_set = tr.make_dataset(spec, range(32))
val_set = tr.make_dataset(spec, range(100000, 100008))

model = build_model(tr.model_config_for("random_missing", base_width=8, depth=3), seed=0)
cfg = tr.TrainConfig(batch_size=8, epochs=3, weights=DESK_WEIGHTS, split_kind="random_missing",
                     k_range=(1, 8))
best, _ = tr.train(train_set, model, cfg, val_set)

curve = tr.missing_channel_sweep(best, val_set, k_max=8)
zero = tr.missing_channel_sweep(tr.zero_predictor, val_set, k_max=8)
for k, m, z in zip(curve["k"], curve["bf_l1"], zero["bf_l1"]):
    print(f"k = {k}: bf L1 model {m:.3f}, zero-filled {z:.3f}")

plt.plot(curve["k"], curve["bf_l1"], "o-", label="model")
plt.plot(zero["k"], zero["bf_l1"], "s--", label="zero-filled")
plt.xlabel("missing channels k")
plt.ylabel("beamformer-space L1")
plt.legend()
plt.show()
