"""
Speckle and how smooth a region looks
=====================================

Multiplicative Gamma noise with L looks has an equivalent number of looks
(mean^2 / variance) of about L.  A crude 3x3 box filter raises the ENL but
blurs edges, which the EPD-ROA ratio picks up.
"""

import numpy as np
from scipy import ndimage

from sarship.metrics import RegionSpec, enl, epd_roa, simulate_speckle

clean = np.full((128, 128), 4.0)
clean[:, 64:] = 12.0  # a vertical edge

flat = RegionSpec(4, 4, 60, 124)
for looks in (1, 4, 16):
    noisy = simulate_speckle(clean, looks, seed=looks)
    print("L=%2d  ENL %.2f" % (looks, enl(noisy, flat)))

noisy = simulate_speckle(clean, 4, seed=7)
smoothed = ndimage.uniform_filter(noisy, 3)
edge = RegionSpec(54, 0, 74, 128)
print("ENL before %.2f after %.2f" % (enl(noisy, flat), enl(smoothed, flat)))
print("EPD-ROA horizontal %.3f vertical %.3f"
      % (epd_roa(noisy, smoothed, edge, "horizontal"), epd_roa(noisy, smoothed, edge, "vertical")))
