"""Oriented boxes, convex polygon clipping and rotated IoU.

Boxes use the long-edge convention: ``h`` is the long side, ``w`` the short
side and ``theta`` the angle (radians) between the +x axis and the long
side, kept in the half-open range [-pi/2, pi/2).  A positive angle turns +x
towards +y.  In row-down image coordinates that looks clockwise on screen.

Polygons are ``(n, 2)`` float arrays of counter-clockwise vertices (in the
same x/y frame); the empty polygon has shape ``(0, 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import InvalidBoxError

HALF_PI = 0.5 * math.pi

__all__ = [
    "ObbBox",
    "wrap_angle",
    "canonicalize_obb",
    "obb_to_polygon",
    "convex_clip",
    "polygon_area",
    "obb_iou",
    "obb_iou_raster_oracle",
    "iou_matrix",
]


@dataclass(frozen=True)
class ObbBox:
    """Canonical oriented box ``(cx, cy, h, w, theta)`` with optional score.

    ``source`` is a free-form tag (e.g. ``"det"`` or ``"seg"``) carried for
    diagnostics only.
    """

    cx: float
    cy: float
    h: float
    w: float
    theta: float
    score: Optional[float] = None
    source: Optional[str] = None

    def __post_init__(self):
        for name in ("cx", "cy", "h", "w", "theta"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidBoxError(f"{name} must be finite, got {getattr(self, name)!r}")
        if not (self.h >= self.w > 0):
            raise InvalidBoxError(f"need h >= w > 0, got h={self.h!r}, w={self.w!r}")
        if not (-HALF_PI <= self.theta < HALF_PI):
            raise InvalidBoxError(f"theta {self.theta!r} outside [-pi/2, pi/2)")
        if self.score is not None and not (0.0 <= self.score <= 1.0):
            raise InvalidBoxError(f"score {self.score!r} outside [0, 1]")

    @property
    def area(self) -> float:
        return self.h * self.w

    @property
    def theta_deg(self) -> float:
        return math.degrees(self.theta)

    def with_score(self, score: Optional[float]) -> "ObbBox":
        return replace(self, score=score)


def wrap_angle(theta: float) -> float:
    """Wrap an angle into [-pi/2, pi/2) modulo pi.

    Angles already in range are returned unchanged so wrapping is idempotent.
    """
    if -HALF_PI <= theta < HALF_PI:
        return theta
    t = (theta + HALF_PI) % math.pi - HALF_PI
    # rounding in the modulo can land exactly on the open end
    if t >= HALF_PI:
        t -= math.pi
    if t < -HALF_PI:
        t = -HALF_PI
    return t


def canonicalize_obb(cx, cy, a, b, theta_raw, score=None, source=None) -> ObbBox:
    """Build a canonical box from centre, two side lengths and an angle.

    ``a`` is the side along direction ``theta_raw``.  When ``a < b`` the long
    side is perpendicular, so the angle is shifted by pi/2 before wrapping.
    """
    a = float(a)
    b = float(b)
    theta_raw = float(theta_raw)
    if not (a > 0 and b > 0):
        raise InvalidBoxError(f"side lengths must be positive, got {a!r}, {b!r}")
    if not math.isfinite(theta_raw):
        raise InvalidBoxError(f"angle must be finite, got {theta_raw!r}")
    if a >= b:
        h, w, theta = a, b, theta_raw
    else:
        h, w, theta = b, a, theta_raw + HALF_PI
    return ObbBox(float(cx), float(cy), h, w, wrap_angle(theta), score, source)


def obb_to_polygon(box: ObbBox) -> np.ndarray:
    """Four counter-clockwise corners; the ``h`` side runs along (cos t, sin t)."""
    c, s = math.cos(box.theta), math.sin(box.theta)
    ux, uy = 0.5 * box.h * c, 0.5 * box.h * s
    vx, vy = -0.5 * box.w * s, 0.5 * box.w * c
    return np.array(
        [
            [box.cx - ux - vx, box.cy - uy - vy],
            [box.cx + ux - vx, box.cy + uy - vy],
            [box.cx + ux + vx, box.cy + uy + vy],
            [box.cx - ux + vx, box.cy - uy + vy],
        ]
    )


def polygon_area(poly) -> float:
    """Shoelace area of a simple polygon; zero for fewer than 3 vertices."""
    p = np.asarray(poly, dtype=float)
    if len(p) < 3:
        return 0.0
    x, y = p[:, 0], p[:, 1]
    return abs(0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))


def _cross(ax, ay, bx, by, px, py):
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


def convex_clip(subject, clip) -> np.ndarray:
    """Intersection of two convex CCW polygons (Sutherland-Hodgman).

    Points lying on a clip edge count as inside, so ``convex_clip(P, P)``
    returns ``P``.
    """
    out = [tuple(v) for v in np.asarray(subject, dtype=float)]
    clip = np.asarray(clip, dtype=float)
    n = len(clip)
    if len(out) < 3 or n < 3:
        return np.empty((0, 2))
    for k in range(n):
        ax, ay = clip[k]
        bx, by = clip[(k + 1) % n]
        inp = out
        out = []
        if not inp:
            break
        px, py = inp[-1]
        p_in = _cross(ax, ay, bx, by, px, py) >= 0
        for qx, qy in inp:
            dq = _cross(ax, ay, bx, by, qx, qy)
            q_in = dq >= 0
            if q_in != p_in:
                dp = _cross(ax, ay, bx, by, px, py)
                t = dp / (dp - dq)
                out.append((px + t * (qx - px), py + t * (qy - py)))
            if q_in:
                out.append((qx, qy))
            px, py, p_in = qx, qy, q_in
    if len(out) < 3:
        return np.empty((0, 2))
    return np.array(out)


def obb_iou(a: ObbBox, b: ObbBox) -> float:
    """Exact IoU of two oriented boxes via polygon clipping.

    The pair is put in a fixed order first so the result is bitwise
    symmetric.
    """
    if (b.cx, b.cy, b.h, b.w, b.theta) < (a.cx, a.cy, a.h, a.w, a.theta):
        a, b = b, a
    inter = polygon_area(convex_clip(obb_to_polygon(a), obb_to_polygon(b)))
    union = a.area + b.area - inter
    iou = inter / union
    return min(max(iou, 0.0), 1.0)


def iou_matrix(boxes_a, boxes_b) -> np.ndarray:
    """Pairwise :func:`obb_iou` table, shape ``(len(a), len(b))``."""
    m = np.zeros((len(boxes_a), len(boxes_b)))
    for i, a in enumerate(boxes_a):
        for j, b in enumerate(boxes_b):
            m[i, j] = obb_iou(a, b)
    return m


def _row_intervals(box: ObbBox, ys):
    """Per-row x-interval ``[lo, hi]`` of the box (``lo > hi`` when empty).

    Inside means ``|along| <= h/2`` and ``|across| <= w/2`` where, for an
    offset ``(dx, dy)`` from the centre, ``along = c*dx + s*dy`` and
    ``across = c*dy - s*dx``.  For fixed ``dy`` each is a pair of linear
    bounds on ``dx``.
    """
    c, s = math.cos(box.theta), math.sin(box.theta)
    dy = ys - box.cy
    lo = np.full(ys.shape, -np.inf)
    hi = np.full(ys.shape, np.inf)
    # coefficient on dx, the part not depending on dx, half extent
    for coef, rest, half in ((c, s * dy, 0.5 * box.h), (-s, c * dy, 0.5 * box.w)):
        if coef == 0.0:
            empty = np.abs(rest) > half
            lo[empty], hi[empty] = np.inf, -np.inf
            continue
        a = (-half - rest) / coef
        b = (half - rest) / coef
        lo = np.maximum(lo, np.minimum(a, b))
        hi = np.minimum(hi, np.maximum(a, b))
    return lo + box.cx, hi + box.cx


def _cells_between(lo, hi, x0, step, n):
    # number of cell centres x0 + (i + 0.5) * step, 0 <= i < n, inside [lo, hi]
    with np.errstate(invalid="ignore"):
        first = np.clip(np.ceil((lo - x0) / step - 0.5), 0, n)
        last = np.clip(np.floor((hi - x0) / step - 0.5), -1, n - 1)
    count = last - first + 1
    return np.where(np.isfinite(count) & (count > 0), count, 0).astype(np.int64)


def obb_iou_raster_oracle(a: ObbBox, b: ObbBox, resolution: int = 1024) -> float:
    """IoU estimated by counting grid cells covered by each box.

    The grid spans the joint axis-aligned bounding region of both boxes with
    ``resolution`` cells per axis; a cell is covered when its centre is
    inside the box.  Each row of a convex box covers one run of cells, so
    rows are counted from interval end points.  Independent of the clipping
    path; used to check :func:`obb_iou`.
    """
    if resolution < 64:
        raise ValueError("resolution must be >= 64")
    pts = np.vstack([obb_to_polygon(a), obb_to_polygon(b)])
    x0, y0 = pts.min(axis=0)
    x1, y1 = pts.max(axis=0)
    step_x = (x1 - x0) / resolution
    ys = y0 + (np.arange(resolution) + 0.5) * ((y1 - y0) / resolution)
    lo_a, hi_a = _row_intervals(a, ys)
    lo_b, hi_b = _row_intervals(b, ys)
    n_a = _cells_between(lo_a, hi_a, x0, step_x, resolution).sum()
    n_b = _cells_between(lo_b, hi_b, x0, step_x, resolution).sum()
    n_ab = _cells_between(np.maximum(lo_a, lo_b), np.minimum(hi_a, hi_b), x0, step_x, resolution).sum()
    union = n_a + n_b - n_ab
    if union == 0:
        return 0.0
    return float(n_ab / union)
