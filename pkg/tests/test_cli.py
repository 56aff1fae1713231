import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from sarship.cli import main
from sarship.io import parse_detections, read_grid, write_grid

FIXTURES = Path(__file__).parent / "fixtures"


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def read_records(path):
    return [json.loads(line) for line in Path(path).read_text().splitlines()]


def metric_values(records):
    return {r["metric"]: r["value"] for r in records}


class TestEval:
    def test_exact_match_all_ones(self, tmp_path, capsys):
        rec = tmp_path / "r.jsonl"
        code, out, _ = run(["eval", "--pred", FIXTURES / "exact_pred.jsonl", "--gt", FIXTURES / "exact_gt.jsonl", "--records", rec], capsys)
        assert code == 0
        vals = metric_values(read_records(rec))
        for key in ("precision", "recall", "f1", "AP@0.5", "AP@0.75"):
            assert vals[key] == 1.0
        assert (vals["n_tp"], vals["n_fp"], vals["n_fn"]) == (3, 0, 0)
        assert "AP@0.75" in out

    def test_corpus_matches_oracle_file(self, tmp_path, capsys):
        rec = tmp_path / "r.jsonl"
        code, _, _ = run(["eval", "--pred", FIXTURES / "corpus_pred.jsonl", "--gt", FIXTURES / "corpus_gt.jsonl", "--records", rec], capsys)
        assert code == 0
        oracle = json.loads((FIXTURES / "corpus_oracle_ap.json").read_text())
        vals = metric_values(read_records(rec))
        assert abs(vals["AP@0.5"] - oracle["0.5"]) < 1e-9
        assert abs(vals["AP@0.75"] - oracle["0.75"]) < 1e-9

    def test_curve_output(self, tmp_path, capsys):
        curve = tmp_path / "c.jsonl"
        run(["eval", "--pred", FIXTURES / "exact_pred.jsonl", "--gt", FIXTURES / "exact_gt.jsonl", "--curve", curve], capsys)
        rows = read_records(curve)
        assert len(rows) == 6
        assert rows[-1]["recall"] == 1.0

    def test_missing_score_is_input_error(self, capsys):
        code, _, err = run(["eval", "--pred", FIXTURES / "exact_gt.jsonl", "--gt", FIXTURES / "exact_gt.jsonl"], capsys)
        assert code == 1
        assert "exact_gt.jsonl:1" in err

    def test_empty_gt(self, tmp_path, capsys):
        (tmp_path / "g.jsonl").write_text("")
        code, _, _ = run(["eval", "--pred", FIXTURES / "exact_pred.jsonl", "--gt", tmp_path / "g.jsonl"], capsys)
        assert code == 1


class TestFuse:
    def test_wrbf_two_box_fixture(self, tmp_path, capsys):
        out = tmp_path / "f.jsonl"
        code, text, _ = run(["fuse", "--det", FIXTURES / "wrbf_det.jsonl", "--seg", FIXTURES / "wrbf_seg.jsonl", "--method", "wrbf", "--out", out], capsys)
        assert code == 0
        (box,) = parse_detections(out)["img_a"]
        assert box.score == pytest.approx(0.7, abs=1e-15)
        assert "0.7" in text

    @pytest.mark.parametrize("method,count", [("nms", 1), ("softnms", 2)])
    def test_baselines(self, tmp_path, capsys, method, count):
        out = tmp_path / "f.jsonl"
        code, _, _ = run(["fuse", "--det", FIXTURES / "wrbf_det.jsonl", "--seg", FIXTURES / "wrbf_seg.jsonl", "--method", method, "--out", out], capsys)
        assert code == 0
        assert len(parse_detections(out)["img_a"]) == count

    def test_unknown_method(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["fuse", "--det", str(FIXTURES / "wrbf_det.jsonl"), "--method", "max"])
        assert exc.value.code == 1


class TestIou:
    def test_pairwise(self, tmp_path, capsys):
        rec = tmp_path / "r.jsonl"
        code, _, _ = run(["iou", FIXTURES / "wrbf_det.jsonl", FIXTURES / "wrbf_seg.jsonl", "--records", rec], capsys)
        assert code == 0
        (row,) = read_records(rec)
        # 40x10 boxes offset by 5 along the long side: 35/45
        assert row["iou"] == pytest.approx(35 / 45, abs=1e-12)

    def test_self_pairs(self, capsys):
        code, out, _ = run(["iou", FIXTURES / "exact_gt.jsonl"], capsys)
        assert code == 0
        assert "img_a" in out and "img_b" not in out.split("\n", 3)[-1]


class TestMasks:
    def test_gaussmask_then_mask2obb(self, tmp_path, capsys):
        boxes = tmp_path / "b.jsonl"
        boxes.write_text(json.dumps({"image_id": "s", "cx": 40, "cy": 30, "w": 10, "h": 26, "theta_deg": 20}) + "\n")
        grid = tmp_path / "g.f32"
        code, _, _ = run(["gaussmask", "--boxes", boxes, "--image-id", "s", "--width", 80, "--height", 64, "--out", grid], capsys)
        assert code == 0
        g = read_grid(grid)
        assert g.shape == (64, 80) and g[30, 40] == 1.0
        out = tmp_path / "o.jsonl"
        code, _, _ = run(["mask2obb", grid, "--image-id", "s", "--decode-gaussian", "--out", out], capsys)
        assert code == 0
        (box,) = parse_detections(out)["s"]
        assert (box.cx, box.cy) == pytest.approx((40, 30), abs=0.5)
        assert (box.h, box.w) == pytest.approx((26, 10), abs=1.0)
        assert math.degrees(box.theta) == pytest.approx(20, abs=1.0)

    def test_mask2obb_plain_rectangle(self, tmp_path, capsys):
        g = np.zeros((20, 30), dtype=np.float32)
        g[4:8, 5:20] = 1.0
        write_grid(tmp_path / "m.f32", g)
        out = tmp_path / "o.jsonl"
        assert run(["mask2obb", tmp_path / "m.f32", "--image-id", "m", "--out", out], capsys)[0] == 0
        (box,) = parse_detections(out)["m"]
        assert (box.h, box.w, box.score) == (15, 4, 1.0)

    def test_mask2obb_rejects_non_probability(self, tmp_path, capsys):
        write_grid(tmp_path / "m.f32", np.full((3, 3), 2.0))
        assert run(["mask2obb", tmp_path / "m.f32", "--image-id", "m"], capsys)[0] == 1

    def test_bad_grid_file(self, tmp_path, capsys):
        (tmp_path / "m.f32").write_bytes(b"F32GRID 3 3\n\0\0")
        code, _, err = run(["mask2obb", tmp_path / "m.f32", "--image-id", "m"], capsys)
        assert code == 1 and "expected 36" in err


class TestDespeckle:
    def test_speckle_sim_then_eval(self, tmp_path, capsys):
        noisy, clean = tmp_path / "n.f32", tmp_path / "c.f32"
        code, _, _ = run(["speckle-sim", "--constant", 2.0, "--width", 128, "--height", 128, "--looks", 4, "--seed", 3, "--out", noisy, "--clean-out", clean], capsys)
        assert code == 0
        rec = tmp_path / "r.jsonl"
        code, _, _ = run(["despeckle-eval", "--original", noisy, "--denoised", noisy, "--region", "0,0,128,128", "--region", "10,10,50,40", "--records", rec], capsys)
        assert code == 0
        rows = read_records(rec)
        assert len(rows) == 2
        assert rows[0]["epd_hd"] == 1.0 and rows[0]["epd_vd"] == 1.0
        assert rows[0]["enl_original"] == pytest.approx(4, rel=0.1)

    def test_constant_region_reports_infinity(self, tmp_path, capsys):
        write_grid(tmp_path / "c.f32", np.ones((4, 4)))
        code, out, _ = run(["despeckle-eval", "--original", tmp_path / "c.f32", "--denoised", tmp_path / "c.f32", "--region", "0,0,4,4"], capsys)
        assert code == 0
        assert "inf" in out and "True" in out

    def test_bad_region(self, tmp_path, capsys):
        write_grid(tmp_path / "c.f32", np.ones((4, 4)))
        assert run(["despeckle-eval", "--original", tmp_path / "c.f32", "--denoised", tmp_path / "c.f32", "--region", "0,0,9,9"], capsys)[0] == 1
        with pytest.raises(SystemExit) as exc:
            main(["despeckle-eval", "--original", "x", "--denoised", "y", "--region", "0,0"])
        assert exc.value.code == 1

    def test_constant_needs_size(self, tmp_path, capsys):
        assert run(["speckle-sim", "--constant", 1.0, "--out", tmp_path / "n.f32"], capsys)[0] == 1


class TestLossCheck:
    def test_passes(self, capsys):
        code, out, _ = run(["loss-check", "--points", 20], capsys)
        assert code == 0
        assert "FAIL" not in out and out.count(" ok") == 5


def test_determinism(tmp_path, capsys):
    def all_outputs(tag):
        d = tmp_path / tag
        d.mkdir()
        outs = []
        commands = [
            ["eval", "--pred", FIXTURES / "corpus_pred.jsonl", "--gt", FIXTURES / "corpus_gt.jsonl", "--curve", d / "curve.jsonl", "--records", d / "eval.jsonl"],
            ["fuse", "--det", FIXTURES / "corpus_pred.jsonl", "--method", "wrbf", "--out", d / "wrbf.jsonl"],
            ["fuse", "--det", FIXTURES / "corpus_pred.jsonl", "--method", "softnms", "--out", d / "soft.jsonl"],
            ["gaussmask", "--boxes", FIXTURES / "exact_gt.jsonl", "--image-id", "img_a", "--width", 128, "--height", 64, "--out", d / "g.f32"],
            ["mask2obb", d / "g.f32", "--image-id", "img_a", "--out", d / "m.jsonl"],
            ["speckle-sim", "--constant", 1.0, "--width", 128, "--height", 64, "--seed", 9, "--out", d / "n.f32"],
            ["despeckle-eval", "--original", d / "n.f32", "--denoised", d / "g.f32", "--region", "0,0,64,64"],
            ["loss-check", "--points", 10],
        ]
        for argv in commands:
            code, out, err = run(argv, capsys)
            assert code == 0, err
            outs.append(out)
        files = {p.name: p.read_bytes() for p in sorted(d.iterdir())}
        return outs, files

    assert all_outputs("a") == all_outputs("b")


def test_console_entry_point_exit_code(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "sarship.cli", "eval", "--pred", str(tmp_path / "missing"), "--gt", "x"], capture_output=True, text=True)
    assert proc.returncode == 1
    assert "sarship:" in proc.stderr
