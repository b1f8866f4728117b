"""
Why more channels help
======================

The -3 dB beamwidth of a uniform linear array shrinks with its length: a
16-channel array resolves four times finer than a 4-channel one.
"""
import matplotlib.pyplot as plt
import numpy as np

from radar_recon import array_pattern, beamwidth

u = None
for n in (4, 16):
    p, u = array_pattern(n, n_az=4096)
    print(f"{n:2d} channels: -3 dB beamwidth {beamwidth(p, u):.4f} in u")
    plt.plot(u, 10 * np.log10(p / p.max() + 1e-12), label=f"{n} channels")

p4, _ = array_pattern(4)
p16, _ = array_pattern(16)
print("ratio:", beamwidth(p4, u) / beamwidth(p16, u))

plt.ylim(-40, 1)
plt.xlabel("u")
plt.ylabel("power (dB)")
plt.legend()
plt.show()
