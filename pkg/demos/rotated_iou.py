"""
Rotated boxes and their overlap
===============================

Boxes are stored long-side first: ``h >= w`` and an angle in [-90, 90)
degrees (radians inside the library).  Any (side, side, angle) triple can be
turned into that form with ``canonicalize_obb``.
"""

import math

from sarship import canonicalize_obb, obb_iou, obb_to_polygon
from sarship.geometry import obb_iou_raster_oracle

# A 4 x 10 box given short side first comes back with the sides swapped
# and the angle turned by a quarter turn.
box = canonicalize_obb(50, 40, 4, 10, math.radians(30))
print("canonical:", box.h, box.w, round(box.theta_deg, 3))
print("corners:\n", obb_to_polygon(box).round(3))

# Two nearly square boxes whose angles differ by almost 90 degrees describe
# almost the same footprint.
a = canonicalize_obb(0, 0, 10, 9.8, math.radians(-70.6))
b = canonicalize_obb(0, 0, 10, 9.8, math.radians(19.7))
print("square-like pair IoU: %.4f" % obb_iou(a, b))

# The exact clipping result agrees with simple cell counting.
c = canonicalize_obb(2, 1, 12, 3, math.radians(15))
print("exact %.5f  raster %.5f" % (obb_iou(a, c), obb_iou_raster_oracle(a, c, 1024)))
