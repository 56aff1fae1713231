"""
Scoring detections
==================

Predictions are matched greedily in score order; a match needs IoU at
least the threshold.  AP integrates the precision envelope over recall.
"""

import math

import numpy as np

from sarship import canonicalize_obb
from sarship.metrics import average_precision, evaluate, pr_curve

rng = np.random.default_rng(0)
gts, preds = {}, {}
for k in range(20):
    truth = [canonicalize_obb(*rng.uniform(20, 200, 2), rng.uniform(15, 40), rng.uniform(5, 10), rng.uniform(-1.5, 1.5))
             for _ in range(3)]
    found = []
    for t in truth:
        if rng.random() < 0.8:
            found.append(canonicalize_obb(t.cx + rng.normal(0, 1), t.cy + rng.normal(0, 1), t.h, t.w,
                                          t.theta + rng.normal(0, 0.05), score=float(rng.uniform(0.4, 1.0))))
    if rng.random() < 0.5:
        found.append(canonicalize_obb(*rng.uniform(20, 200, 2), 20, 6, 0.0, score=float(rng.uniform(0, 0.6))))
    gts["scene%02d" % k], preds["scene%02d" % k] = truth, found

report = evaluate(preds, gts)
for key in ("precision", "recall", "f1", "ap", "ap_high"):
    print("%-9s %.4f" % (key, report[key]))

curve = pr_curve(preds, gts, 0.5)
print("curve points:", len(curve), " AP@0.5 again:", round(average_precision(curve), 4))
