"""Regenerate the committed CLI fixtures.

Run from the repository root:  python3 tests/fixtures/make_fixtures.py

The reference AP values for the 200-image corpus come from the brute-force
prefix re-matching oracle in tests/oracles.py, run on the boxes as parsed
back from the written files, so the oracle sees exactly what the CLI reads.
"""

import json
import math
import sys
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent))

from oracles import brute_force_curve, envelope_ap  # noqa: E402

from sarship.geometry import canonicalize_obb  # noqa: E402
from sarship.io import parse_detections, write_detections  # noqa: E402

CORPUS_SEED = 20240607
N_INSTANCES = 200


def exact_match():
    gts = {
        "img_a": [canonicalize_obb(30, 40, 24, 8, math.radians(15)), canonicalize_obb(90, 20, 18, 6, math.radians(-60))],
        "img_b": [canonicalize_obb(50, 50, 30, 10, 0.0)],
    }
    preds = {k: [b.with_score(0.9 - 0.1 * i) for i, b in enumerate(v)] for k, v in gts.items()}
    write_detections(HERE / "exact_gt.jsonl", gts)
    write_detections(HERE / "exact_pred.jsonl", preds)


def wrbf_pair():
    write_detections(HERE / "wrbf_det.jsonl", {"img_a": [canonicalize_obb(10, 0, 40, 10, 0.0, score=0.8)]})
    write_detections(HERE / "wrbf_seg.jsonl", {"img_a": [canonicalize_obb(15, 0, 40, 10, 0.0, score=0.6)]})


def corpus():
    rng = np.random.default_rng(CORPUS_SEED)
    gts, preds = {}, {}
    for k in range(N_INSTANCES):
        key = f"inst{k:03d}"
        n_gt = int(rng.integers(1, 6))
        g = []
        for _ in range(n_gt):
            cx, cy = rng.uniform(10, 90, 2)
            h = rng.uniform(8, 30)
            g.append(canonicalize_obb(cx, cy, h, h / rng.uniform(1, 4), rng.uniform(-math.pi / 2, math.pi / 2)))
        p = []
        n_pred = int(rng.integers(0, 11))
        for _ in range(n_pred):
            score = float(np.round(rng.random(), 3))
            if g and rng.random() < 0.7:
                t = g[int(rng.integers(0, len(g)))]
                p.append(
                    canonicalize_obb(
                        t.cx + rng.normal(0, 1.5),
                        t.cy + rng.normal(0, 1.5),
                        t.h * rng.uniform(0.85, 1.15),
                        t.w * rng.uniform(0.85, 1.15),
                        t.theta + rng.normal(0, 0.08),
                        score=score,
                    )
                )
            else:
                cx, cy = rng.uniform(10, 90, 2)
                p.append(canonicalize_obb(cx, cy, rng.uniform(8, 30), rng.uniform(4, 8), rng.uniform(-1.5, 1.5), score=score))
        gts[key] = g
        if p:
            preds[key] = p
    write_detections(HERE / "corpus_gt.jsonl", gts)
    write_detections(HERE / "corpus_pred.jsonl", preds)

    gts = parse_detections(HERE / "corpus_gt.jsonl")
    preds = parse_detections(HERE / "corpus_pred.jsonl", require_score=True)
    oracle = {}
    for thr in (0.5, 0.75):
        rec, prec = brute_force_curve(preds, gts, thr)
        oracle[f"{thr:g}"] = envelope_ap(rec, prec)
    (HERE / "corpus_oracle_ap.json").write_text(json.dumps(oracle, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    exact_match()
    wrbf_pair()
    corpus()
