"""Command-line front end: ``sarship <subcommand> ...``.

Each subcommand prints a plain-text table to stdout.  ``--records PATH``
additionally writes the same report as JSON lines.  Exit status is 0 on
success, 1 for bad input and 2 when an internal consistency check fails.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import List

import numpy as np

from . import io
from .errors import FormatError, InvalidBoxError, InvariantError, ShapeError
from .fusion import rotated_nms, soft_nms, tag_source, wrbf
from .geometry import obb_iou
from .losses import (
    LossConfig,
    arw_angle_loss,
    focal_cls_loss,
    gradient_check,
    smooth_l1,
)
from .masks import GaussParams, mask_to_obbs, rotated_gaussian_mask
from .metrics import (
    RegionSpec,
    enl,
    epd_roa_detail,
    evaluate,
    pr_curve,
    simulate_speckle,
)

GRAD_TOL = 1e-4


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _unit_interval(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in (0, 1)")
    return v


def _region(text):
    try:
        x0, y0, x1, y1 = (int(t) for t in text.split(","))
        return RegionSpec(x0, y0, x1, y1)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad region {text!r}: expected x0,y0,x1,y1 ({exc})")


def _fmt(v):
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return f"{v:.6g}"
    return str(v)


class Report:
    """Collects rows, then renders a table and optional JSON lines."""

    def __init__(self, title, columns):
        self.title = title
        self.columns = columns
        self.rows = []

    def add(self, **row):
        self.rows.append(row)

    def table(self):
        cells = [[_fmt(r.get(c, "")) for c in self.columns] for r in self.rows]
        widths = [max([len(c)] + [len(row[k]) for row in cells]) for k, c in enumerate(self.columns)]
        lines = [self.title, "  ".join(c.ljust(wd) for c, wd in zip(self.columns, widths)).rstrip()]
        lines.append("  ".join("-" * wd for wd in widths))
        for row in cells:
            lines.append("  ".join(v.ljust(wd) for v, wd in zip(row, widths)).rstrip())
        return "\n".join(lines) + "\n"

    def emit(self, records_path=None, out=None):
        out = out or sys.stdout
        out.write(self.table())
        if records_path:
            with open(records_path, "w", encoding="utf-8") as fh:
                for row in self.rows:
                    clean = {k: (None if isinstance(v, float) and math.isinf(v) else v) for k, v in row.items()}
                    fh.write(json.dumps({"report": self.title, **clean}) + "\n")


def cmd_iou(args):
    a = io.parse_detections(args.boxes)
    b = io.parse_detections(args.against) if args.against else None
    rep = Report("iou", ["image_id", "i", "j", "iou"])
    for image_id in sorted(a):
        left = a[image_id]
        if b is None:
            pairs = [(i, j, left[i], left[j]) for i in range(len(left)) for j in range(i + 1, len(left))]
        else:
            right = b.get(image_id, [])
            pairs = [(i, j, x, y) for i, x in enumerate(left) for j, y in enumerate(right)]
        for i, j, x, y in pairs:
            rep.add(image_id=image_id, i=i, j=j, iou=obb_iou(x, y))
    rep.emit(args.records)


def cmd_fuse(args):
    det = io.parse_detections(args.det, require_score=True)
    seg = io.parse_detections(args.seg, require_score=True) if args.seg else {}
    fused = {}
    for image_id in sorted(set(det) | set(seg)):
        d = tag_source(det.get(image_id, []), "det")
        s = tag_source(seg.get(image_id, []), "seg")
        if args.method == "wrbf":
            fused[image_id] = wrbf(d, s, args.iou_thr)
        elif args.method == "nms":
            kept = rotated_nms(d + s, args.iou_thr)
            for x in range(len(kept)):
                for y in range(x + 1, len(kept)):
                    if obb_iou(kept[x], kept[y]) >= args.iou_thr:
                        raise InvariantError("NMS survivors overlap above the threshold")
            fused[image_id] = kept
        else:
            fused[image_id] = soft_nms(d + s, args.iou_thr, args.score_floor)
    if args.out:
        io.write_detections(args.out, fused)
    rep = Report(f"fuse ({args.method})", ["image_id", "cx", "cy", "w", "h", "theta_deg", "score"])
    for image_id in sorted(fused):
        for box in fused[image_id]:
            rec = io.box_record(image_id, box)
            rep.add(**rec)
    rep.emit(args.records)


def cmd_gaussmask(args):
    boxes = io.parse_detections(args.boxes).get(args.image_id, [])
    params = GaussParams(args.lambda_w, args.lambda_h)
    grid = np.zeros((args.height, args.width))
    for box in boxes:
        grid = np.maximum(grid, rotated_gaussian_mask(box, args.width, args.height, params))
    io.write_grid(args.out, grid)
    rep = Report("gaussmask", ["image_id", "boxes", "width", "height", "max", "mean"])
    rep.add(image_id=args.image_id, boxes=len(boxes), width=args.width, height=args.height,
            max=float(grid.max()), mean=float(grid.mean()))
    rep.emit(args.records)


def cmd_mask2obb(args):
    grid = io.read_grid(args.grid)
    if np.any(grid < 0) or np.any(grid > 1) or not np.all(np.isfinite(grid)):
        raise InputError("grid values must be probabilities in [0, 1]")
    decode = GaussParams(args.lambda_w, args.lambda_h) if args.decode_gaussian else None
    boxes = mask_to_obbs(grid, args.tau, args.min_area, decode=decode)
    if args.out:
        io.write_detections(args.out, {args.image_id: boxes})
    rep = Report("mask2obb", ["image_id", "cx", "cy", "w", "h", "theta_deg", "score"])
    for box in boxes:
        rep.add(**io.box_record(args.image_id, box))
    rep.emit(args.records)


def cmd_eval(args):
    preds = io.parse_detections(args.pred, require_score=True)
    gts = io.parse_detections(args.gt)
    if sum(len(v) for v in gts.values()) == 0:
        raise InputError("ground-truth file has no boxes")
    res = evaluate(preds, gts, args.iou_thr, args.iou_thr_high)
    n_gt = sum(len(v) for v in gts.values())
    n_pred = sum(len(v) for v in preds.values())
    if res["n_tp"] + res["n_fn"] != n_gt or res["n_tp"] + res["n_fp"] != n_pred:
        raise InvariantError("match tallies do not add up")
    rep = Report("eval", ["metric", "value"])
    rep.add(metric="precision", value=res["precision"])
    rep.add(metric="recall", value=res["recall"])
    rep.add(metric="f1", value=res["f1"])
    rep.add(metric=f"AP@{args.iou_thr:g}", value=res["ap"])
    rep.add(metric=f"AP@{args.iou_thr_high:g}", value=res["ap_high"])
    rep.add(metric="n_tp", value=res["n_tp"])
    rep.add(metric="n_fp", value=res["n_fp"])
    rep.add(metric="n_fn", value=res["n_fn"])
    rep.emit(args.records)
    if args.curve:
        with open(args.curve, "w", encoding="utf-8") as fh:
            for thr in (args.iou_thr, args.iou_thr_high):
                c = pr_curve(preds, gts, thr)
                for r, p, s in zip(c.recall, c.precision, c.scores):
                    fh.write(json.dumps({"iou_thr": thr, "score": float(s), "recall": float(r), "precision": float(p)}) + "\n")


def cmd_despeckle_eval(args):
    original = io.read_grid(args.original).astype(float)
    denoised = io.read_grid(args.denoised).astype(float)
    if original.shape != denoised.shape:
        raise InputError(f"grid shapes differ: {original.shape} vs {denoised.shape}")
    rep = Report("despeckle-eval", ["region", "enl_original", "enl_denoised", "zero_variance",
                                    "epd_hd", "epd_vd", "epd_mean", "skipped_pairs"])
    for reg in args.region:
        e_o = enl(original, reg)
        e_d = enl(denoised, reg)
        hd = epd_roa_detail(original, denoised, reg, "horizontal")
        vd = epd_roa_detail(original, denoised, reg, "vertical")
        rep.add(region=f"{reg.x0},{reg.y0},{reg.x1},{reg.y1}", enl_original=e_o, enl_denoised=e_d,
                zero_variance=math.isinf(e_o) or math.isinf(e_d), epd_hd=hd.value, epd_vd=vd.value,
                epd_mean=0.5 * (hd.value + vd.value), skipped_pairs=hd.skipped + vd.skipped)
    rep.emit(args.records)


def cmd_speckle_sim(args):
    if args.clean:
        clean = io.read_grid(args.clean).astype(float)
    else:
        if args.width is None or args.height is None:
            raise InputError("--constant needs --width and --height")
        clean = np.full((args.height, args.width), args.constant)
    noisy = simulate_speckle(clean, args.looks, args.seed)
    io.write_grid(args.out, noisy)
    if args.clean_out:
        io.write_grid(args.clean_out, clean)
    full = RegionSpec(0, 0, clean.shape[1], clean.shape[0])
    rep = Report("speckle-sim", ["looks", "seed", "width", "height", "mean", "enl"])
    rep.add(looks=args.looks, seed=args.seed, width=clean.shape[1], height=clean.shape[0],
            mean=float(noisy.mean()), enl=enl(noisy, full))
    rep.emit(args.records)


def cmd_loss_check(args):
    cfg = LossConfig(r=args.r, gamma=args.gamma)
    rep = Report("loss-check", ["check", "value", "status"])
    rep.add(check="smooth_l1(0.5)", value=smooth_l1(0.5), status="value")
    rep.add(check="focal(p_t=0.5)", value=focal_cls_loss(1, 0.5, cfg), status="value")
    sq_gt, sq_pred = math.radians(-70.6), math.radians(19.7)
    rep.add(check="arw(-70.6deg, 19.7deg, square)", value=arw_angle_loss(sq_gt, sq_pred, 1.0, 1.0, cfg), status="value")
    worst = gradient_check(args.points, args.seed, cfg=cfg)
    failed = False
    for name, err in worst.items():
        ok = err <= GRAD_TOL
        failed |= not ok
        rep.add(check=f"grad {name}", value=err, status="ok" if ok else "FAIL")
    rep.emit(args.records)
    if failed:
        raise InvariantError("analytic and finite-difference gradients disagree")


def build_parser():
    p = _Parser(prog="sarship", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.set_defaults(func=func)
        sp.add_argument("--records", metavar="PATH", help="also write the report as JSON lines")
        return sp

    sp = add("iou", cmd_iou, "pairwise IoU table")
    sp.add_argument("boxes")
    sp.add_argument("against", nargs="?")

    sp = add("fuse", cmd_fuse, "NMS, soft-NMS or WRBF over prediction files")
    sp.add_argument("--det", required=True)
    sp.add_argument("--seg")
    sp.add_argument("--method", choices=["nms", "softnms", "wrbf"], default="wrbf")
    sp.add_argument("--iou-thr", type=_unit_interval, default=0.5)
    sp.add_argument("--score-floor", type=float, default=0.001)
    sp.add_argument("--out")

    sp = add("gaussmask", cmd_gaussmask, "render rotated Gaussian masks to a grid")
    sp.add_argument("--boxes", required=True)
    sp.add_argument("--image-id", required=True)
    sp.add_argument("--width", type=int, required=True)
    sp.add_argument("--height", type=int, required=True)
    sp.add_argument("--lambda-w", type=float, default=1.0)
    sp.add_argument("--lambda-h", type=float, default=1.0)
    sp.add_argument("--out", required=True)

    sp = add("mask2obb", cmd_mask2obb, "probability grid to oriented boxes")
    sp.add_argument("grid")
    sp.add_argument("--image-id", required=True)
    sp.add_argument("--tau", type=_unit_interval, default=0.5)
    sp.add_argument("--min-area", type=float, default=0.0)
    sp.add_argument("--decode-gaussian", action="store_true")
    sp.add_argument("--lambda-w", type=float, default=1.0)
    sp.add_argument("--lambda-h", type=float, default=1.0)
    sp.add_argument("--out")

    sp = add("eval", cmd_eval, "precision, recall, F1 and AP")
    sp.add_argument("--pred", required=True)
    sp.add_argument("--gt", required=True)
    sp.add_argument("--iou-thr", type=_unit_interval, default=0.5)
    sp.add_argument("--iou-thr-high", type=_unit_interval, default=0.75)
    sp.add_argument("--curve", metavar="PATH", help="write PR-curve points as JSON lines")

    sp = add("despeckle-eval", cmd_despeckle_eval, "ENL and EPD-ROA over regions")
    sp.add_argument("--original", required=True)
    sp.add_argument("--denoised", required=True)
    sp.add_argument("--region", type=_region, action="append", required=True, help="x0,y0,x1,y1 (half-open)")

    sp = add("speckle-sim", cmd_speckle_sim, "multiply a clean grid by gamma speckle")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--clean")
    src.add_argument("--constant", type=float)
    sp.add_argument("--width", type=int)
    sp.add_argument("--height", type=int)
    sp.add_argument("--looks", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.add_argument("--clean-out")

    sp = add("loss-check", cmd_loss_check, "loss values and gradient agreement")
    sp.add_argument("--points", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--gamma", type=float, default=2.0)
    sp.add_argument("--r", type=float, default=1.5)
    return p


def main(argv: List[str] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except InvariantError as exc:
        print(f"sarship: internal check failed: {exc}", file=sys.stderr)
        return 2
    except (InputError, FormatError, InvalidBoxError, ShapeError, ValueError, OSError) as exc:
        print(f"sarship: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
