"""
Fusing detection and segmentation boxes
=======================================

Weighted rotated box fusion clusters overlapping boxes from both branches
and averages them, weighting by confidence.  NMS keeps one box per cluster
instead.
"""

import math

from sarship import canonicalize_obb, rotated_nms, soft_nms, wrbf

det = [
    canonicalize_obb(10, 0, 40, 10, 0.0, score=0.8),
    canonicalize_obb(100, 40, 30, 8, math.radians(-88), score=0.55),
]
seg = [
    canonicalize_obb(15, 0, 40, 10, 0.0, score=0.6),
    canonicalize_obb(101, 41, 32, 9, math.radians(89), score=0.5),
]

for name, boxes in (
    ("wrbf", wrbf(det, seg, iou_thr=0.55)),
    ("nms", rotated_nms(det + seg, 0.5)),
    ("soft-nms", soft_nms(det + seg, 0.5)),
):
    print(name)
    for b in boxes:
        print("   cx %7.3f cy %6.3f  h %5.2f w %5.2f  theta %7.2f  score %.3f"
              % (b.cx, b.cy, b.h, b.w, b.theta_deg, b.score))
