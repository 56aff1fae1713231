"""
Gaussian box masks and back again
=================================

``rotated_gaussian_mask`` paints a soft confidence map for a box.
Thresholding it gives an ellipse; ``mask_to_obbs`` with ``decode`` set
fits that ellipse and maps it back to the box that produced it.
"""

import math

import numpy as np

from sarship import GaussParams, canonicalize_obb, mask_to_obbs, rotated_gaussian_mask

params = GaussParams(lambda_w=1.0, lambda_h=1.0)
ships = [
    canonicalize_obb(70, 70, 48, 20, math.radians(25)),
    canonicalize_obb(180, 120, 60, 22, math.radians(-50)),
]

grid = np.zeros((200, 260))
for s in ships:
    grid = np.maximum(grid, rotated_gaussian_mask(s, 260, 200, params))

print("pixels above 0.5:", int((grid >= 0.5).sum()))
for found in mask_to_obbs(grid, tau=0.5, decode=params):
    print("cx %.2f cy %.2f h %.2f w %.2f theta %.2f deg score %.3f"
          % (found.cx, found.cy, found.h, found.w, found.theta_deg, found.score))

# Without ``decode`` each blob simply gets its minimum-area rectangle.
binary = np.zeros((40, 60))
binary[10:18, 5:45] = 0.9
print(mask_to_obbs(binary)[0])
