"""Detection scoring (P/R/F1, PR curve, AP) and despeckling quality metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence

import numpy as np

from .errors import ShapeError
from .geometry import ObbBox, obb_iou


@dataclass
class MatchResult:
    """Outcome of matching one image's predictions against its ground truth.

    ``order`` lists prediction indices in processing order (descending
    score); ``tp`` and ``scores`` follow the same order.  ``gt_index[k]`` is
    the ground truth claimed by ``order[k]`` or -1.
    """

    order: List[int]
    tp: List[bool]
    scores: List[float]
    gt_index: List[int]
    n_gt: int

    @property
    def n_tp(self) -> int:
        return sum(self.tp)

    @property
    def n_fp(self) -> int:
        return len(self.tp) - self.n_tp

    @property
    def n_fn(self) -> int:
        return self.n_gt - self.n_tp


@dataclass
class PRCurve:
    """Cumulative (recall, precision) after each prediction in the sweep."""

    recall: np.ndarray
    precision: np.ndarray
    scores: np.ndarray
    n_gt: int

    def __len__(self):
        return len(self.recall)


@dataclass(frozen=True)
class RegionSpec:
    """Half-open pixel window ``[x0, x1) x [y0, y1)``."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError(f"empty region {self}")
        if self.x0 < 0 or self.y0 < 0:
            raise ValueError(f"region {self} has negative origin")

    def crop(self, img) -> np.ndarray:
        img = np.asarray(img, dtype=float)
        rows, cols = img.shape
        if self.x1 > cols or self.y1 > rows:
            raise ValueError(f"region {self} outside a {cols}x{rows} grid")
        return img[self.y0 : self.y1, self.x0 : self.x1]


def _score_order(preds):
    return sorted(range(len(preds)), key=lambda i: -preds[i].score)


def match_detections(preds: Sequence[ObbBox], gts: Sequence[ObbBox], iou_thr: float = 0.5) -> MatchResult:
    """Greedy matching in descending score order.

    Each prediction takes the unclaimed ground truth with the highest IoU
    (ties to the lower index) and is a true positive iff that IoU is at
    least ``iou_thr``.
    """
    if not 0.0 < iou_thr < 1.0:
        raise ValueError("iou_thr must be in (0, 1)")
    for p in preds:
        if p.score is None:
            raise ValueError("predictions need scores")
    claimed = [False] * len(gts)
    order = _score_order(preds)
    tp, scores, gt_index = [], [], []
    for i in order:
        best, best_j = -1.0, -1
        for j, g in enumerate(gts):
            if claimed[j]:
                continue
            iou = obb_iou(preds[i], g)
            if iou > best:
                best, best_j = iou, j
        hit = best_j >= 0 and best >= iou_thr
        if hit:
            claimed[best_j] = True
        tp.append(hit)
        scores.append(preds[i].score)
        gt_index.append(best_j if hit else -1)
    return MatchResult(order=order, tp=tp, scores=scores, gt_index=gt_index, n_gt=len(gts))


def precision_recall_f1(n_tp: int, n_fp: int, n_fn: int):
    """Precision, recall and F1 from tallies; zero denominators give 0."""
    precision = n_tp / (n_tp + n_fp) if n_tp + n_fp else 0.0
    recall = n_tp / (n_tp + n_fn) if n_tp + n_fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def match_all(preds_by_image: Mapping[str, Sequence[ObbBox]], gts_by_image: Mapping[str, Sequence[ObbBox]], iou_thr=0.5) -> Dict[str, MatchResult]:
    """Per-image matching over the union of image ids, in sorted id order."""
    out = {}
    for key in sorted(set(preds_by_image) | set(gts_by_image)):
        out[key] = match_detections(preds_by_image.get(key, []), gts_by_image.get(key, []), iou_thr)
    return out


def pr_curve(preds_by_image, gts_by_image, iou_thr: float = 0.5) -> PRCurve:
    """Global score-descending sweep of per-image matches.

    Ties are broken by image id, then by the prediction's rank within its
    image.
    """
    matches = match_all(preds_by_image, gts_by_image, iou_thr)
    n_gt = sum(m.n_gt for m in matches.values())
    if n_gt == 0:
        raise ValueError("no ground-truth boxes: recall is undefined")
    rows = []
    for key, m in matches.items():
        for rank, (s, hit) in enumerate(zip(m.scores, m.tp)):
            rows.append((-s, key, rank, hit))
    rows.sort()
    hits = np.array([r[3] for r in rows], dtype=bool)
    ctp = np.cumsum(hits)
    cfp = np.cumsum(~hits)
    recall = ctp / n_gt
    with np.errstate(invalid="ignore"):
        precision = np.where(ctp + cfp > 0, ctp / np.maximum(ctp + cfp, 1), 0.0)
    scores = np.array([-r[0] for r in rows], dtype=float)
    return PRCurve(recall=recall.astype(float), precision=precision.astype(float), scores=scores, n_gt=n_gt)


def average_precision(curve: PRCurve) -> float:
    """Area under the precision envelope (all-points interpolation).

    The envelope at recall ``r`` is the highest precision reached at any
    recall >= ``r``; recall beyond the last point contributes nothing.
    """
    if len(curve) == 0:
        return 0.0
    mrec = np.concatenate([[0.0], curve.recall, [1.0]])
    mpre = np.concatenate([[0.0], curve.precision, [0.0]])
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    steps = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def evaluate(preds_by_image, gts_by_image, iou_thr=0.5, iou_thr_high=0.75) -> Dict[str, float]:
    """P, R, F1 at ``iou_thr`` plus AP at both thresholds."""
    matches = match_all(preds_by_image, gts_by_image, iou_thr)
    n_tp = sum(m.n_tp for m in matches.values())
    n_fp = sum(m.n_fp for m in matches.values())
    n_fn = sum(m.n_fn for m in matches.values())
    p, r, f1 = precision_recall_f1(n_tp, n_fp, n_fn)
    return {
        "precision": p,
        "recall": r,
        "f1": f1,
        "n_tp": n_tp,
        "n_fp": n_fp,
        "n_fn": n_fn,
        "ap": average_precision(pr_curve(preds_by_image, gts_by_image, iou_thr)),
        "ap_high": average_precision(pr_curve(preds_by_image, gts_by_image, iou_thr_high)),
    }


def enl(img, region: RegionSpec) -> float:
    """Equivalent number of looks ``mean^2 / var`` (population variance).

    A zero-variance region returns ``math.inf``.
    """
    patch = region.crop(img)
    if patch.size < 2:
        raise ValueError("ENL needs at least 2 pixels")
    mean = patch.mean()
    var = patch.var()
    if var == 0:
        return math.inf
    return float(mean * mean / var)


@dataclass(frozen=True)
class EpdRoa:
    value: float
    pairs: int
    skipped: int


def epd_roa_detail(original, denoised, region: RegionSpec, direction: str = "horizontal") -> EpdRoa:
    """Edge preservation by ratio of adjacent pixels, with pair counts.

    Sliding pairs ``(k, k+1)`` along ``direction`` inside the region; a pair
    is skipped when its second pixel is zero in either image.  If every
    remaining original ratio is zero the value is 1 when the denoised ratios
    are zero too and ``inf`` otherwise.
    """
    original = np.asarray(original, dtype=float)
    denoised = np.asarray(denoised, dtype=float)
    if original.shape != denoised.shape:
        raise ShapeError(f"shape mismatch: {original.shape} vs {denoised.shape}")
    o = region.crop(original)
    d = region.crop(denoised)
    if direction in ("horizontal", "hd"):
        o1, o2, d1, d2 = o[:, :-1], o[:, 1:], d[:, :-1], d[:, 1:]
    elif direction in ("vertical", "vd"):
        o1, o2, d1, d2 = o[:-1, :], o[1:, :], d[:-1, :], d[1:, :]
    else:
        raise ValueError(f"unknown direction {direction!r}")
    if o1.size == 0:
        raise ValueError(f"region too thin for {direction} pairs")
    ok = (o2 != 0) & (d2 != 0)
    used = int(ok.sum())
    skipped = int(ok.size - used)
    if used == 0:
        raise ValueError("every pixel pair has a zero divisor")
    num = float(np.abs(d1[ok] / d2[ok]).sum())
    den = float(np.abs(o1[ok] / o2[ok]).sum())
    if den == 0:
        # every original ratio is zero: identical (all-zero) ratios count as
        # perfectly preserved, anything else as unbounded
        value = 1.0 if num == 0 else math.inf
    else:
        value = num / den
    return EpdRoa(value=value, pairs=used, skipped=skipped)


def epd_roa(original, denoised, region: RegionSpec, direction: str = "horizontal") -> float:
    return epd_roa_detail(original, denoised, region, direction).value


def epd_roa_mean(original, denoised, region: RegionSpec) -> float:
    """Mean of the horizontal and vertical values."""
    return 0.5 * (epd_roa(original, denoised, region, "horizontal") + epd_roa(original, denoised, region, "vertical"))


def simulate_speckle(clean, looks: int = 1, seed=None) -> np.ndarray:
    """Multiply by unit-mean Gamma(looks, 1/looks) noise."""
    if int(looks) != looks or looks < 1:
        raise ValueError("looks must be an integer >= 1")
    clean = np.asarray(clean, dtype=float)
    if np.any(clean < 0):
        raise ValueError("clean image must be non-negative")
    rng = np.random.default_rng(seed)
    return clean * rng.gamma(shape=looks, scale=1.0 / looks, size=clean.shape)
