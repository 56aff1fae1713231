"""
Angle-aware regression loss
===========================

The angle term is scaled by ``|sin(alpha * d)|`` where ``d`` is the angle
error.  Elongated boxes (h/w above 1.5) use alpha = 1, so only a half turn
is free; square-like boxes use alpha = 2, so a quarter turn is free too.
"""

import math

import numpy as np

from sarship.losses import LossConfig, arw_angle_loss, focal_cls_loss, gradient_check

errors = np.linspace(0, math.pi, 7)
print(" error(deg)  elongated  square-like")
for d in errors:
    print("%10.1f  %9.4f  %11.4f" % (math.degrees(d), arw_angle_loss(0.0, d, 4.0, 1.0), arw_angle_loss(0.0, d, 1.2, 1.0)))

# The focal classification term fades out for confident, correct outputs.
for gamma in (0.0, 2.0):
    cfg = LossConfig(gamma=gamma)
    print("gamma=%g:" % gamma, [round(focal_cls_loss(1, p, cfg), 4) for p in (0.1, 0.5, 0.9)])

# Every analytic gradient is checked against central differences.
for name, err in gradient_check(50, seed=0).items():
    print("%-13s max relative error %.1e" % (name, err))
