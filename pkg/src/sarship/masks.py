"""Rotated Gaussian masks and the mask -> oriented box extraction path.

Grids are 2-D numpy arrays indexed ``[row, col]`` = ``[y, x]``; pixel
centres sit at integer coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List, Optional

import numpy as np
from scipy import ndimage

from .geometry import HALF_PI, ObbBox, canonicalize_obb

__all__ = [
    "GaussParams",
    "Component",
    "rotated_gaussian_mask",
    "threshold_mask",
    "extract_components",
    "trace_outer_border",
    "convex_hull",
    "min_area_rect",
    "ellipse_fit",
    "mask_to_obbs",
]


@dataclass(frozen=True)
class GaussParams:
    lambda_w: float = 1.0
    lambda_h: float = 1.0

    def __post_init__(self):
        if not (self.lambda_w > 0 and self.lambda_h > 0):
            raise ValueError("covariance factors must be positive")


@dataclass
class Component:
    """One 8-connected foreground blob.

    ``pixels`` and ``contour`` are ``(n, 2)`` integer arrays of ``(x, y)``.
    ``contour`` is the outer border in tracing order.
    """

    pixels: np.ndarray
    contour: np.ndarray

    @property
    def area(self) -> int:
        return len(self.pixels)


def rotated_gaussian_mask(box: ObbBox, width: int, height: int, params: GaussParams = GaussParams()) -> np.ndarray:
    """Per-pixel confidence of a rotated Gaussian centred on ``box``.

    Offsets from the centre are rotated by ``-theta`` into the box frame
    ``(u, v)`` and scored ``exp(-(lw*u^2/(2 w^2) + lh*v^2/(2 h^2)))``: the
    short side ``w`` scales the first box-frame axis and the long side ``h``
    the second.
    """
    if width <= 0 or height <= 0:
        raise ValueError(f"grid dimensions must be positive, got {width}x{height}")
    c, s = math.cos(box.theta), math.sin(box.theta)
    dx = np.arange(width, dtype=float) - box.cx
    dy = np.arange(height, dtype=float) - box.cy
    u = dx[None, :] * c + dy[:, None] * s
    v = dy[:, None] * c - dx[None, :] * s
    return np.exp(-(params.lambda_w * u * u / (2.0 * box.w**2) + params.lambda_h * v * v / (2.0 * box.h**2)))


def threshold_mask(g, tau: float) -> np.ndarray:
    """1 where ``g >= tau`` else 0, as uint8."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must be in (0, 1), got {tau!r}")
    return (np.asarray(g) >= tau).astype(np.uint8)


# Moore neighbourhood in clockwise order on a row-down grid, as (drow, dcol),
# starting from the west neighbour.
_NEIGHBOURS = [(0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1)]
_NEIGHBOUR_INDEX = {d: k for k, d in enumerate(_NEIGHBOURS)}


def trace_outer_border(img, start):
    """Follow the outer border of the blob containing ``start``.

    ``img`` is a binary array holding a single component; ``start`` is the
    first foreground pixel in raster order, so its west neighbour is
    background.  Implements the outer-border following step of Suzuki and
    Abe's topological analysis.  Returns a list of ``(row, col)``.
    """
    rows, cols = img.shape

    def fg(r, c):
        return 0 <= r < rows and 0 <= c < cols and img[r, c] != 0

    def offset(centre, pixel):
        return _NEIGHBOUR_INDEX[(pixel[0] - centre[0], pixel[1] - centre[1])]

    i, j = start
    # search clockwise around the start, beginning at the background west cell
    first = None
    for k in range(8):
        dr, dc = _NEIGHBOURS[k]
        if fg(i + dr, j + dc):
            first = (i + dr, j + dc)
            break
    if first is None:
        return [(i, j)]

    border = []
    prev = first
    cur = (i, j)
    while True:
        border.append(cur)
        # counter-clockwise from the element after prev
        k0 = offset(cur, prev)
        nxt = None
        for step in range(1, 9):
            k = (k0 - step) % 8
            dr, dc = _NEIGHBOURS[k]
            cand = (cur[0] + dr, cur[1] + dc)
            if fg(*cand):
                nxt = cand
                break
        if nxt == (i, j) and cur == first:
            break
        prev, cur = cur, nxt
    return border


def extract_components(binary) -> List[Component]:
    """8-connected foreground components with their outer borders.

    Components are ordered by their first pixel in raster order.
    """
    b = np.asarray(binary) != 0
    if b.size == 0 or not b.any():
        return []
    labels, n = ndimage.label(b, structure=np.ones((3, 3), dtype=int))
    slices = ndimage.find_objects(labels)
    comps = []
    for k, sl in enumerate(slices, start=1):
        sub = labels[sl] == k
        r0, c0 = sl[0].start, sl[1].start
        rr, cc = np.nonzero(sub)
        start = (int(rr[0]), int(cc[0]))
        border = trace_outer_border(sub, start)
        pixels = np.column_stack([cc + c0, rr + r0])
        contour = np.array([(c + c0, r + r0) for r, c in border], dtype=int)
        comps.append(Component(pixels=pixels, contour=contour))
    comps.sort(key=lambda comp: (comp.pixels[0, 1], comp.pixels[0, 0]))
    return comps


def convex_hull(points) -> np.ndarray:
    """Counter-clockwise convex hull (Andrew's monotone chain).

    Collinear points are dropped, so degenerate input yields 1 or 2 vertices.
    """
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(tuple(p))
    upper = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(tuple(p))
    return np.array(lower[:-1] + upper[:-1])


def _pixel_corners(points):
    pts = np.asarray(points, dtype=float)
    offs = np.array([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]])
    return (pts[:, None, :] + offs[None, :, :]).reshape(-1, 2)


def min_area_rect(points, pixels: bool = True, min_side: float = 1.0) -> ObbBox:
    """Minimum-area enclosing rectangle by rotating calipers over hull edges.

    With ``pixels=True`` each point is a unit pixel cell, so an ``a x b``
    block of pixels gives an ``a x b`` rectangle.  Sides shorter than
    ``min_side`` are floored to it (collinear or single-point input).
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("min_area_rect needs at least one point")
    if pixels:
        pts = _pixel_corners(pts)
    hull = convex_hull(pts)

    if len(hull) == 1:
        return canonicalize_obb(hull[0, 0], hull[0, 1], min_side, min_side, 0.0)
    if len(hull) == 2:
        d = hull[1] - hull[0]
        length = max(float(np.hypot(*d)), min_side)
        mid = hull.mean(axis=0)
        return canonicalize_obb(mid[0], mid[1], length, min_side, math.atan2(d[1], d[0]))

    best = None
    n = len(hull)
    for k in range(n):
        e = hull[(k + 1) % n] - hull[k]
        norm = math.hypot(e[0], e[1])
        if norm == 0:
            continue
        ux, uy = e / norm
        along = hull[:, 0] * ux + hull[:, 1] * uy
        across = -hull[:, 0] * uy + hull[:, 1] * ux
        a0, a1 = along.min(), along.max()
        b0, b1 = across.min(), across.max()
        area = (a1 - a0) * (b1 - b0)
        if best is None or area < best[0]:
            best = (area, ux, uy, a0, a1, b0, b1)
    _, ux, uy, a0, a1, b0, b1 = best
    ma, mb = 0.5 * (a0 + a1), 0.5 * (b0 + b1)
    cx = ma * ux - mb * uy
    cy = ma * uy + mb * ux
    return canonicalize_obb(
        cx, cy, max(a1 - a0, min_side), max(b1 - b0, min_side), math.atan2(uy, ux)
    )


def ellipse_fit(pixels) -> ObbBox:
    """Rectangle circumscribing the ellipse with the pixel set's second moments.

    Each pixel is a unit cell, so a uniform filled ellipse with semi-axes
    ``a >= b`` yields a ``2a x 2b`` box aligned with its major axis.  Unlike
    :func:`min_area_rect` on a jagged raster, the orientation is stable for
    low-eccentricity blobs.
    """
    pts = np.asarray(pixels, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("ellipse_fit needs at least one pixel")
    mean = pts.mean(axis=0)
    d = pts - mean
    cov = d.T @ d / len(pts) + np.eye(2) / 12.0
    evals, evecs = np.linalg.eigh(cov)
    minor, major = np.sqrt(np.maximum(evals, 0.0)) * 2.0
    vx, vy = evecs[:, 1]
    return canonicalize_obb(mean[0], mean[1], 2.0 * major, 2.0 * minor, math.atan2(vy, vx))


def _decode_gaussian(pixels, tau: float, params: GaussParams) -> ObbBox:
    # The tau level set of rotated_gaussian_mask is an ellipse with semi-axis
    # w*k_w along the box direction and h*k_h across it.
    fit = ellipse_fit(pixels)
    k_w = math.sqrt(2.0 * math.log(1.0 / tau) / params.lambda_w)
    k_h = math.sqrt(2.0 * math.log(1.0 / tau) / params.lambda_h)
    # the major axis lies across the source box direction
    h = 0.5 * fit.h / k_h
    w = 0.5 * fit.w / k_w
    return canonicalize_obb(fit.cx, fit.cy, h, w, fit.theta - HALF_PI)


def mask_to_obbs(
    p,
    tau: float = 0.5,
    min_area: float = 0.0,
    decode: Optional[GaussParams] = None,
    source: Optional[str] = "seg",
) -> List[ObbBox]:
    """Oriented boxes enclosing each thresholded component of a probability map.

    Each component with at least ``min_area`` pixels yields its minimum-area
    rectangle scored by the mean probability over the component.  When
    ``decode`` is given the map is taken to be a :func:`rotated_gaussian_mask`
    rendering with those factors: each component is fitted as an ellipse
    (:func:`ellipse_fit`) and mapped back to the generating box.
    """
    if min_area < 0:
        raise ValueError("min_area must be non-negative")
    p = np.asarray(p, dtype=float)
    binary = threshold_mask(p, tau)
    out = []
    for comp in extract_components(binary):
        if comp.area < min_area:
            continue
        score = float(np.mean(p[comp.pixels[:, 1], comp.pixels[:, 0]]))
        score = min(max(score, 0.0), 1.0)
        if decode is None:
            box = min_area_rect(comp.pixels)
        else:
            box = _decode_gaussian(comp.pixels, tau, decode)
        out.append(replace(box, score=score, source=source))
    return out
