"""Scalar loss kernels for the multitask detector and their gradients.

Every loss has a matching ``*_grad`` giving the analytic derivative with
respect to the prediction, so the closed forms can be checked against
:func:`finite_diff_grad`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidBoxError, ShapeError
from .geometry import ObbBox, wrap_angle

PROB_EPS = 1e-7

STAGE_ONE_LAMBDAS = (1.0, 0.0, 0.0)
STAGE_TWO_LAMBDAS = (0.0, 1.0, 1.0)


@dataclass(frozen=True)
class LossConfig:
    """Hyper-parameters shared by the loss kernels.

    ``r`` is the aspect-ratio threshold that switches the angle-loss period,
    ``gamma`` the focal exponent, and ``lambda1..3`` weight the denoise,
    segmentation and detection terms of :func:`joint_loss`.
    """

    r: float = 1.5
    gamma: float = 2.0
    lambda1: float = 1.0
    lambda2: float = 1.0
    lambda3: float = 1.0

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"r must be positive, got {self.r!r}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma!r}")
        for name in ("lambda1", "lambda2", "lambda3"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class RegressionTarget:
    """Encoded box offsets ``(tx, ty, tw, th)`` plus the angle in radians."""

    tx: float
    ty: float
    tw: float
    th: float
    theta: float


def smooth_l1(x):
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    out = np.where(ax < 1.0, 0.5 * x * x, ax - 0.5)
    return float(out) if out.ndim == 0 else out


def smooth_l1_grad(x):
    x = np.asarray(x, dtype=float)
    out = np.where(np.abs(x) < 1.0, x, np.sign(x))
    return float(out) if out.ndim == 0 else out


def arw_alpha(h: float, w: float, cfg: LossConfig = LossConfig()) -> int:
    """Angle period factor: 1 for elongated boxes (h/w > r), else 2."""
    if not (h > 0 and w > 0):
        raise InvalidBoxError(f"side lengths must be positive, got h={h!r}, w={w!r}")
    return 1 if h / w > cfg.r else 2


def _angle_delta(theta_gt, theta_pred):
    return wrap_angle(float(theta_gt)) - wrap_angle(float(theta_pred))


def arw_angle_loss(theta_gt, theta_pred, h, w, cfg: LossConfig = LossConfig()) -> float:
    """Aspect-ratio weighted angle loss ``|sin(a*d)| * smooth_l1(d)``.

    ``d`` is the difference of the two angles after each is wrapped into
    [-pi/2, pi/2); ``a`` comes from :func:`arw_alpha` on the ground-truth
    sides.
    """
    alpha = arw_alpha(h, w, cfg)
    d = _angle_delta(theta_gt, theta_pred)
    return abs(math.sin(alpha * d)) * smooth_l1(d)


def arw_angle_loss_grad(theta_gt, theta_pred, h, w, cfg: LossConfig = LossConfig()) -> float:
    """Derivative of :func:`arw_angle_loss` with respect to ``theta_pred``.

    Valid away from the kinks where ``sin(a*d) = 0`` and away from the
    wrap boundary of ``theta_pred``.
    """
    alpha = arw_alpha(h, w, cfg)
    d = _angle_delta(theta_gt, theta_pred)
    sn = math.sin(alpha * d)
    dd = alpha * math.cos(alpha * d) * math.copysign(1.0, sn) * smooth_l1(d) + abs(sn) * smooth_l1_grad(d)
    return -dd


def _clamp(p):
    # only the log(0) end needs guarding; q = 1 gives an exact zero loss
    return np.clip(p, PROB_EPS, 1.0)


def focal_cls_loss(p_gt, p_pred, cfg: LossConfig = LossConfig()) -> float:
    """Binary focal loss ``-(1-p_t)^gamma * log(p_t)`` with no balancing factor.

    ``p_t`` is ``p_pred`` for a positive label and ``1 - p_pred`` otherwise,
    clamped below at 1e-7.
    """
    pt = p_pred if p_gt else 1.0 - p_pred
    pt = float(_clamp(pt))
    return -((1.0 - pt) ** cfg.gamma) * math.log(pt)


def focal_cls_loss_grad(p_gt, p_pred, cfg: LossConfig = LossConfig()) -> float:
    """Derivative of :func:`focal_cls_loss` with respect to ``p_pred``."""
    sign = 1.0 if p_gt else -1.0
    pt = p_pred if p_gt else 1.0 - p_pred
    if pt <= PROB_EPS:
        return 0.0
    g = cfg.gamma
    if pt >= 1.0:
        return sign * (-1.0 if g == 0 else 0.0)
    d_pt = -((1.0 - pt) ** g) / pt
    if g != 0:
        d_pt += g * (1.0 - pt) ** (g - 1.0) * math.log(pt)
    return sign * d_pt


def detection_loss(
    targets: Sequence[RegressionTarget],
    preds: Sequence[RegressionTarget],
    boxes: Sequence[ObbBox],
    labels: Sequence[int],
    probs: Sequence[float],
    cfg: LossConfig = LossConfig(),
) -> float:
    """Detection loss: mean smooth-L1 offsets + mean ARW angle + mean focal.

    ``boxes`` are the ground-truth boxes, used only for their aspect ratio.
    """
    n = len(targets)
    if n == 0:
        raise ValueError("empty batch")
    if not (len(preds) == len(boxes) == len(labels) == len(probs) == n):
        raise ShapeError("targets, preds, boxes, labels and probs must have equal length")
    reg = ang = cls = 0.0
    for t, p, box, y, pr in zip(targets, preds, boxes, labels, probs):
        reg += sum(smooth_l1(getattr(t, k) - getattr(p, k)) for k in ("tx", "ty", "th", "tw"))
        ang += arw_angle_loss(t.theta, p.theta, box.h, box.w, cfg)
        cls += focal_cls_loss(y, pr, cfg)
    return reg / n + ang / n + cls / n


def _same_shape(*arrays):
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise ShapeError(f"shape mismatch: {sorted(shapes)}")


def denoise_mse(y, y_hat) -> float:
    """Mean squared error over all pixels."""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    _same_shape(y, y_hat)
    if y.size == 0:
        raise ShapeError("empty grid")
    return float(np.mean((y - y_hat) ** 2))


def denoise_mse_grad(y, y_hat) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    _same_shape(y, y_hat)
    return 2.0 * (y_hat - y) / y.size


def _seg_inputs(p, y, g):
    p = np.asarray(p, dtype=float)
    y = np.asarray(y)
    g = np.asarray(g, dtype=float)
    _same_shape(p, y, g)
    if p.size == 0:
        raise ShapeError("empty grid")
    if np.any((p < 0) | (p > 1)) or not np.all(np.isfinite(p)):
        raise ValueError("probabilities must lie in [0, 1]")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    if np.any(g < 0):
        raise ValueError("weights must be non-negative")
    return p, y.astype(bool), g


def segmentation_loss(p, y, g, cfg: LossConfig = LossConfig()) -> float:
    """Gaussian-weighted focal segmentation loss (negated so it is >= 0).

    ``-(1/WH) * sum g * (1 - q)^gamma * log(q)`` with ``q = p`` on ship pixels
    and ``1 - p`` on background, clamped before the log.
    """
    p, y, g = _seg_inputs(p, y, g)
    q = _clamp(np.where(y, p, 1.0 - p))
    terms = g * (1.0 - q) ** cfg.gamma * np.log(q)
    return float(-terms.sum() / p.size)


def segmentation_loss_grad(p, y, g, cfg: LossConfig = LossConfig()) -> np.ndarray:
    """Per-pixel derivative of :func:`segmentation_loss` with respect to ``p``."""
    p, y, g = _seg_inputs(p, y, g)
    q_raw = np.where(y, p, 1.0 - p)
    q = _clamp(q_raw)
    gm = cfg.gamma
    with np.errstate(divide="ignore", invalid="ignore"):
        d_q = -((1.0 - q) ** gm) / q
        if gm != 0:
            d_q = d_q + gm * (1.0 - q) ** (gm - 1.0) * np.log(q)
    # limit at q = 1
    d_q = np.where(q >= 1.0, -1.0 if gm == 0 else 0.0, d_q)
    d_q = np.where(q_raw > PROB_EPS, d_q, 0.0)
    sign = np.where(y, 1.0, -1.0)
    return g * sign * d_q / p.size


def joint_loss(l_denoise, l_segment, l_object, cfg: LossConfig = LossConfig()) -> float:
    return cfg.lambda1 * l_denoise + cfg.lambda2 * l_segment + cfg.lambda3 * l_object


def finite_diff_grad(f: Callable, x, eps: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function of a vector."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    x = np.array(x, dtype=float)
    flat = x.reshape(-1)
    grad = np.empty_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = f(x)
        flat[i] = orig - eps
        fm = f(x)
        flat[i] = orig
        grad[i] = (fp - fm) / (2.0 * eps)
    return grad.reshape(x.shape)


def relative_error(analytic, numeric, floor: float = 1e-6) -> float:
    """Largest ``|a - n| / max(|a|, |n|, floor)`` over all entries."""
    a = np.asarray(analytic, dtype=float)
    n = np.asarray(numeric, dtype=float)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / scale))


def gradient_check(n_points: int = 100, seed: int = 0, eps: float = 1e-6, cfg: LossConfig = LossConfig()):
    """Compare analytic and central-difference gradients at seeded points.

    Points avoid the kinks of each loss (clamp edges, zeros of the ARW
    weight, angle wrap boundaries).  Returns ``{loss_name: max relative
    error}``.
    """
    rng = np.random.default_rng(seed)
    worst = {"smooth_l1": 0.0, "focal": 0.0, "arw_angle": 0.0, "denoise_mse": 0.0, "segmentation": 0.0}

    def record(name, a, n):
        worst[name] = max(worst[name], relative_error(a, n))

    for _ in range(n_points):
        x = rng.uniform(-3.0, 3.0)
        while abs(abs(x) - 1.0) < 1e-3:
            x = rng.uniform(-3.0, 3.0)
        record("smooth_l1", smooth_l1_grad(x), finite_diff_grad(lambda v: smooth_l1(v[0]), [x], eps)[0])

        gcfg = LossConfig(r=cfg.r, gamma=float(rng.uniform(0.0, 3.0)))
        y = int(rng.integers(0, 2))
        p = rng.uniform(0.05, 0.95)
        record("focal", focal_cls_loss_grad(y, p, gcfg), finite_diff_grad(lambda v: focal_cls_loss(y, v[0], gcfg), [p], eps)[0])

        w = rng.uniform(5.0, 30.0)
        h = w * rng.uniform(1.0, 4.0)
        while True:
            t_gt = rng.uniform(-1.4, 1.4)
            t_pr = rng.uniform(-1.4, 1.4)
            alpha = arw_alpha(h, w, cfg)
            d = t_gt - t_pr
            if abs(math.sin(alpha * d)) > 0.05 and abs(abs(d) - 1.0) > 1e-3:
                break
        record(
            "arw_angle",
            arw_angle_loss_grad(t_gt, t_pr, h, w, cfg),
            finite_diff_grad(lambda v: arw_angle_loss(t_gt, v[0], h, w, cfg), [t_pr], eps)[0],
        )

        shape = (3, 4)
        target = rng.uniform(0.0, 1.0, shape)
        est = rng.uniform(0.0, 1.0, shape)
        record("denoise_mse", denoise_mse_grad(target, est), finite_diff_grad(lambda v: denoise_mse(target, v), est, eps))

        probs = rng.uniform(0.05, 0.95, shape)
        labels = rng.integers(0, 2, shape)
        weights = rng.uniform(0.1, 1.0, shape)
        record(
            "segmentation",
            segmentation_loss_grad(probs, labels, weights, gcfg),
            finite_diff_grad(lambda v: segmentation_loss(v, labels, weights, gcfg), probs, eps),
        )
    return worst
