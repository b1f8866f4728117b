"""
How sparse is a radar scene?
============================

CA-CFAR detections are grouped into the coarse azimuth cells a 4-channel
array would see.  A coarse cell is empty, holds one detection, or holds
several.  Only the last case needs the finer resolution of a 16-channel
array.  A dense static scene (many reflectors at zero velocity) shows that
this happens at low thresholds.
"""
import matplotlib.pyplot as plt
import numpy as np

from radar_recon import PointTarget, Scene, SceneSpec, make_scene, preprocess, synth_raw
from radar_recon.cfar import threshold_sweep

factors = np.arange(0, 31, 3)

rng = np.random.default_rng(0)
wall = tuple(PointTarget(float(r), 0.0, float(u), 1.0, float(rng.uniform(-np.pi, np.pi)))
             for r in range(10, 50, 4) for u in np.linspace(-0.6, 0.6, 9))
dense = preprocess(synth_raw(Scene(wall, noise_sigma=0.05, seed=1)))

spec = SceneSpec(n_targets=(1, 3), noise_sigma=(0.3, 1.0))
sparse_frames = [preprocess(synth_raw(make_scene(spec, s))) for s in range(8)]

for name, frames in (("dense static", [dense]), ("random", sparse_frames)):
    c = threshold_sweep(frames, factors)
    print(name)
    for f, e, s, m in zip(factors, c["static"]["empty"], c["static"]["single"],
                          c["static"]["multiple"]):
        print(f"  {f:2d} dB  empty {e:.3f}  single {s:.3f}  multiple {m:.4f}")
    plt.plot(factors, c["static"]["sparse"], label=name)

plt.xlabel("CFAR threshold factor (dB)")
plt.ylabel("sparse fraction, static cells")
plt.legend()
plt.show()
