"""
From chirps to a beamformed cube
================================

One point target is synthesised as a raw FMCW MIMO frame, turned into a
range-Doppler cube and beamformed over the 16 receive channels.
"""
import numpy as np
import matplotlib.pyplot as plt

from radar_recon import PointTarget, Scene, beamform, preprocess, synth_raw
from radar_recon.scene import u_grid

# a target at range bin 40, Doppler bin +10, sin(azimuth) = 0.5
scene = Scene((PointTarget(40, 10, 0.5),), noise_sigma=0.05, seed=1)
raw = synth_raw(scene)
print("raw frame (channel, sweep, sample):", raw.shape)

rd = preprocess(raw)
print("range-Doppler cube (channel, range, Doppler):", rd.shape)
print("peak cell on channel 0:", tuple(map(int, np.unravel_index(np.abs(rd[0]).argmax(), rd[0].shape))))

# neighbouring channels differ by pi * u in phase
step = np.angle(rd[1, 40, 34] / rd[0, 40, 34])
print(f"channel phase step {step:.4f} rad (pi/2 = {np.pi / 2:.4f})")

bf = beamform(rd, n_az=64, axis=0)
az, r, d = np.unravel_index(np.abs(bf).argmax(), bf.shape)
print(f"beamformer peak at azimuth bin {az} (u = {u_grid(64)[az]:.3f})")

fig, ax = plt.subplots(1, 2, figsize=(9, 3.5))
ax[0].imshow(20 * np.log10(np.abs(rd[0]) + 1e-9), aspect="auto", origin="lower")
ax[0].set_title("range-Doppler, channel 0 (dB)")
ax[0].set_xlabel("Doppler bin")
ax[0].set_ylabel("range bin")
ax[1].plot(u_grid(64), 20 * np.log10(np.abs(bf[:, r, d]) + 1e-9))
ax[1].set_title("azimuth cut at the target cell")
ax[1].set_xlabel("u = sin(azimuth)")
fig.tight_layout()
plt.show()
