"""
Checking the autodiff engine
============================

Every layer of the network is differentiated by the small reverse-mode
engine.  Central finite differences confirm the gradients.
"""
import numpy as np

from radar_recon import autodiff as ad
from radar_recon.autodiff import Tensor, grad_check
from radar_recon.model import ModelConfig, build_model

rng = np.random.default_rng(0)
x = Tensor(rng.normal(size=(2, 3, 6, 4)), name="x")
w = Tensor(rng.normal(size=(5, 3, 3, 3)), name="w")
print("conv2d:", grad_check(lambda: (ad.conv2d(x, w) ** 2).sum(), [x, w]))

g = Tensor(rng.normal(size=3), name="gamma")
b = Tensor(rng.normal(size=3), name="beta")
print("instance norm:", grad_check(lambda: (ad.instance_norm(x, g, b) ** 3).sum(), [x, g, b]))

# a whole (tiny) Unet with attention and position planes
m = build_model(ModelConfig(1, 2, base_width=2, depth=2, head_gain=1.0), seed=1)
for name, t in m.params.items():
    t.name = name
inp = Tensor(rng.normal(size=(1, 2, 8, 8)))
target = rng.normal(size=(1, 4, 8, 8))
report = grad_check(lambda: ((m(inp) - Tensor(target)) ** 2).mean(), m.parameters(),
                    max_entries=8)
print(f"{len(report)} parameter blocks, worst relative error {max(report.values()):.2e}")
