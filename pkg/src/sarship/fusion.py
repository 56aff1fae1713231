"""Suppression and fusion of scored oriented boxes.

``rotated_nms`` and ``soft_nms`` are the usual baselines; ``wrbf`` merges the
detection-branch and segmentation-branch boxes by confidence-weighted
averaging of clustered boxes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List, Sequence

from .geometry import ObbBox, canonicalize_obb, obb_iou


def _by_score(boxes):
    # descending score; ties keep input order
    order = sorted(range(len(boxes)), key=lambda i: -boxes[i].score)
    return [boxes[i] for i in order]


def _check_scored(boxes):
    for b in boxes:
        if b.score is None:
            raise ValueError("every box needs a score")


def rotated_nms(boxes: Sequence[ObbBox], iou_thr: float = 0.5) -> List[ObbBox]:
    """Greedy NMS: keep the best box, drop all with IoU >= ``iou_thr`` to it."""
    if not 0.0 < iou_thr < 1.0:
        raise ValueError("iou_thr must be in (0, 1)")
    _check_scored(boxes)
    remaining = _by_score(list(boxes))
    keep = []
    while remaining:
        best = remaining.pop(0)
        keep.append(best)
        remaining = [b for b in remaining if obb_iou(best, b) < iou_thr]
    return keep


def soft_nms(boxes: Sequence[ObbBox], iou_thr: float = 0.5, score_floor: float = 0.001) -> List[ObbBox]:
    """Linear soft-NMS.

    Each round selects the highest scoring box; every remaining box whose IoU
    with it is at least ``iou_thr`` has its score multiplied by ``1 - IoU``.
    Boxes falling below ``score_floor`` are discarded.  Output is in
    selection order, which is descending by final score.
    """
    if not 0.0 < iou_thr < 1.0:
        raise ValueError("iou_thr must be in (0, 1)")
    if not 0.0 <= score_floor < 1.0:
        raise ValueError("score_floor must be in [0, 1)")
    _check_scored(boxes)
    pool = [b for b in boxes if b.score >= score_floor]
    keep = []
    while pool:
        k = max(range(len(pool)), key=lambda i: (pool[i].score, -i))
        best = pool.pop(k)
        keep.append(best)
        nxt = []
        for b in pool:
            iou = obb_iou(best, b)
            if iou >= iou_thr:
                b = b.with_score(b.score * (1.0 - iou))
            if b.score >= score_floor:
                nxt.append(b)
        pool = nxt
    return keep


@dataclass
class FusionCluster:
    """Boxes merged into one fused box by :func:`wrbf`."""

    members: List[ObbBox] = field(default_factory=list)
    fused: ObbBox = None

    def add(self, box: ObbBox):
        self.members.append(box)
        self.fused = fuse_members(self.members)


def _near_seed(theta, seed):
    # shift by multiples of pi to within pi/2 of the seed angle
    while theta - seed > 0.5 * math.pi:
        theta -= math.pi
    while theta - seed < -0.5 * math.pi:
        theta += math.pi
    return theta


def fuse_members(members: Sequence[ObbBox]) -> ObbBox:
    """Fused box of a cluster; the first member is the seed.

    Confidence is the plain mean of member scores.  Centre and sides are
    score-weighted means.  Angles are first moved within pi/2 of the seed's
    angle, then combined as ``atan2(sum c*sin, sum c*cos)``.
    """
    if len(members) == 1:
        return members[0]
    t = len(members)
    total = sum(m.score for m in members)
    conf = total / t
    seed = members[0].theta
    if total > 0:
        weights = [m.score for m in members]
    else:
        weights = [1.0] * t
        total = float(t)
    cx = sum(c * m.cx for c, m in zip(weights, members)) / total
    cy = sum(c * m.cy for c, m in zip(weights, members)) / total
    h = sum(c * m.h for c, m in zip(weights, members)) / total
    w = sum(c * m.w for c, m in zip(weights, members)) / total
    angles = [_near_seed(m.theta, seed) for m in members]
    sin_sum = sum(c * math.sin(a) for c, a in zip(weights, angles)) / total
    cos_sum = sum(c * math.cos(a) for c, a in zip(weights, angles)) / total
    theta = math.atan2(sin_sum, cos_sum)
    return canonicalize_obb(cx, cy, h, w, theta, score=conf, source=members[0].source)


def wrbf_clusters(det_boxes, seg_boxes, iou_thr: float = 0.55) -> List[FusionCluster]:
    """Clusters built by :func:`wrbf`, in creation order."""
    if not 0.0 < iou_thr < 1.0:
        raise ValueError("iou_thr must be in (0, 1)")
    pool = list(det_boxes) + list(seg_boxes)
    _check_scored(pool)
    clusters: List[FusionCluster] = []
    for box in _by_score(pool):
        for cl in clusters:
            if obb_iou(cl.fused, box) >= iou_thr:
                cl.add(box)
                break
        else:
            cl = FusionCluster()
            cl.add(box)
            clusters.append(cl)
    return clusters


def wrbf(det_boxes: Sequence[ObbBox], seg_boxes: Sequence[ObbBox] = (), iou_thr: float = 0.55) -> List[ObbBox]:
    """Weighted rotated boxes fusion of detection and segmentation boxes.

    Boxes from both lists are visited in descending confidence (ties by
    position, detection list first).  Each joins the first existing cluster
    whose fused box overlaps it with IoU >= ``iou_thr``, otherwise it seeds a
    new cluster.  Returns the fused boxes sorted by confidence.
    """
    fused = [cl.fused for cl in wrbf_clusters(det_boxes, seg_boxes, iou_thr)]
    return _by_score(fused)


def tag_source(boxes, source):
    return [replace(b, source=source) for b in boxes]
